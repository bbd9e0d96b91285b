#pragma once

// Interaction-distance graphs, minimum spanning trees and their degree
// statistics.

#include "approx_inverse.hpp"
#include "core.hpp"
#include "market_analytics.hpp"
#include "model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

namespace maxent {

struct WeightedGraph {
  std::vector<std::string> labels;
  Matrix dist;  // symmetric, zero diagonal

  std::size_t size() const { return labels.size(); }
};

struct TreeEdge {
  std::size_t i = 0, j = 0;  // i < j
  double weight = 0.0;
  bool operator==(const TreeEdge&) const = default;
};

struct Tree {
  std::size_t vertices = 0;
  std::vector<TreeEdge> edges;
  double length = 0.0;

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> d(vertices, 0);
    for (const auto& e : edges) {
      ++d[e.i];
      ++d[e.j];
    }
    return d;
  }
};

/// d_ij = sqrt(2 (1 - J_ij / max_{k != l} |J_kl|)). The Mantegna form with the
/// normalized coupling in place of a correlation coefficient.
inline WeightedGraph couplingToDistance(const CouplingModel& model) {
  const std::size_t n = model.size();
  if (n < 2) throw DegenerateGraphError("interaction graph needs N >= 2");
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) scale = std::max(scale, std::abs(model.J(i, j)));
  if (!(scale > 0.0)) throw DegenerateGraphError("all off-diagonal couplings are zero; distances undefined");
  WeightedGraph g{model.labels, Matrix::Zero(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double x = std::clamp(model.J(i, j) / scale, -1.0, 1.0);
      g.dist(i, j) = g.dist(j, i) = std::sqrt(2.0 * (1.0 - x));
    }
  return g;
}

/// Kruskal over edges ordered by (weight, i, j).
inline Tree minimumSpanningTree(const WeightedGraph& graph) {
  const std::size_t n = graph.size();
  if (n < 2) throw InputError("spanning tree needs N >= 2");
  std::vector<std::tuple<double, std::size_t, std::size_t>> all;
  all.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) all.emplace_back(graph.dist(i, j), i, j);
  std::sort(all.begin(), all.end());

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  Tree t;
  t.vertices = n;
  for (const auto& [w, i, j] : all) {
    const auto a = find(i), b = find(j);
    if (a == b) continue;
    parent[a] = b;
    t.edges.push_back({i, j, w});
    t.length += w;
    if (t.edges.size() == n - 1) break;
  }
  return t;
}

/// degree -> number of vertices with that degree.
inline std::map<std::size_t, std::size_t> degreeDistribution(const Tree& tree) {
  std::map<std::size_t, std::size_t> out;
  for (auto d : tree.degrees()) ++out[d];
  return out;
}

struct PowerLawFit {
  double alpha = 0.0;
  double alphaStdErr = 0.0;
  double r2 = 0.0;
  std::size_t pointsUsed = 0;
};

/// Least squares of ln f(n) on ln n over degrees with nonzero frequency;
/// alpha = -slope.
template <class Freq>
PowerLawFit fitPowerLaw(const std::map<std::size_t, Freq>& freqs) {
  std::vector<double> x, y;
  for (const auto& [degree, f] : freqs)
    if (degree > 0 && f > 0) {
      x.push_back(std::log(double(degree)));
      y.push_back(std::log(double(f)));
    }
  const std::size_t m = x.size();
  if (m < 2) throw InsufficientDataError("power-law fit needs at least 2 degrees with nonzero frequency");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(m);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / double(m);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double r = y[k] - (intercept + slope * x[k]);
    sse += r * r;
  }
  PowerLawFit fit;
  fit.alpha = -slope;
  fit.pointsUsed = m;
  fit.alphaStdErr = m > 2 ? std::sqrt(sse / double(m - 2) / sxx) : 0.0;
  const double tiny = 1e-24 * std::max(1.0, syy);
  fit.r2 = syy > tiny ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : (sse <= tiny ? 1.0 : 0.0);
  return fit;
}

/// Per-window MST length L(t), emitted as l(t) = (L(t) - <L>) / <L>.
inline TimeSeriesReport mstLengthSeries(const SpinMatrix& spins, const WindowSpec& spec,
                                        const InversionOptions& options) {
  auto r = detail::reportSkeleton(spins, spec, SeriesKind::mstLengthDeviation);
  InversionOptions inner = options;
  inner.threads = 1;
  detail::fillWindows(spins, r, options.threads, [&](const SpinMatrix& w) {
    return minimumSpanningTree(couplingToDistance(invertSpins(w, inner).model)).length;
  });
  const auto vals = r.present();
  if (!vals.empty()) {
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / double(vals.size());
    for (auto& v : r.values)
      if (v) *v = (*v - mean) / mean;
  }
  return r;
}

/// %.17g, enough to round-trip any double.
inline std::string formatExact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string dotQuote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Undirected DOT graph; vertices carry their degree, edges their distance.
inline std::string exportDot(const Tree& tree, const std::vector<std::string>& labels) {
  if (labels.size() != tree.vertices) throw InputError("label count does not match tree size");
  const auto deg = tree.degrees();
  std::string out = "graph mst {\n";
  for (std::size_t v = 0; v < tree.vertices; ++v)
    out += "  " + detail::dotQuote(labels[v]) + " [degree=" + std::to_string(deg[v]) + "];\n";
  for (const auto& e : tree.edges)
    out += "  " + detail::dotQuote(labels[e.i]) + " -- " + detail::dotQuote(labels[e.j]) +
           " [weight=" + formatExact(e.weight) + "];\n";
  out += "}\n";
  return out;
}

inline nlohmann::ordered_json treeToJson(const Tree& tree, const std::vector<std::string>& labels) {
  if (labels.size() != tree.vertices) throw InputError("label count does not match tree size");
  const auto deg = tree.degrees();
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (std::size_t v = 0; v < tree.vertices; ++v)
    j["nodes"].push_back({{"id", v}, {"label", labels[v]}, {"degree", deg[v]}});
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : tree.edges)
    j["edges"].push_back({{"source", e.i}, {"target", e.j}, {"weight", e.weight}});
  j["length"] = tree.length;
  return j;
}

/// JSON adjacency {nodes, edges, length}; non-ASCII labels are \u-escaped.
inline std::string exportJson(const Tree& tree, const std::vector<std::string>& labels) {
  return treeToJson(tree, labels).dump(2, ' ', true) + "\n";
}

/// Inverse of exportJson. Returns the tree and its labels.
inline std::pair<Tree, std::vector<std::string>> treeFromJson(const nlohmann::json& j) {
  try {
    Tree t;
    std::vector<std::string> labels;
    for (const auto& node : j.at("nodes")) labels.push_back(node.at("label").get<std::string>());
    t.vertices = labels.size();
    for (const auto& e : j.at("edges")) {
      TreeEdge edge{e.at("source").get<std::size_t>(), e.at("target").get<std::size_t>(),
                    e.at("weight").get<double>()};
      if (edge.i >= t.vertices || edge.j >= t.vertices) throw InputError("tree edge references unknown node");
      t.edges.push_back(edge);
      t.length += edge.weight;
    }
    if (t.vertices > 0 && t.edges.size() != t.vertices - 1) throw InputError("tree must have N - 1 edges");
    return {std::move(t), std::move(labels)};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed tree JSON: ") + e.what());
  }
}

}  // namespace maxent
