#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls the library routine it is used to check.

#include <maxent_market/maxent_market.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using maxent::CouplingModel;
using maxent::Matrix;
using maxent::Vector;

inline std::vector<int> spinsOf(std::uint32_t pattern, int n) {
  std::vector<int> s(n);
  for (int b = 0; b < n; ++b) s[b] = (pattern >> b) & 1u ? 1 : -1;
  return s;
}

/// (1/2) sum_{i != j} J_ij s_i s_j + sum_i h_i s_i, the symmetric double-sum form.
inline double halfDoubleSumUtility(const CouplingModel& m, const std::vector<int>& s) {
  double u = 0.0;
  const int n = static_cast<int>(s.size());
  for (int i = 0; i < n; ++i) {
    u += m.h(i) * s[i];
    for (int j = 0; j < n; ++j)
      if (i != j) u += 0.5 * m.J(i, j) * s[i] * s[j];
  }
  return u;
}

/// Direct sum of exp(U) over all configurations (plain, no log-sum-exp).
inline double bruteLogZ(const CouplingModel& m) {
  const int n = static_cast<int>(m.size());
  double z = 0.0;
  for (std::uint32_t p = 0; p < (1u << n); ++p) z += std::exp(halfDoubleSumUtility(m, spinsOf(p, n)));
  return std::log(z);
}

struct BruteMoments {
  Vector q;
  Matrix Q;
};

inline BruteMoments bruteMoments(const CouplingModel& m) {
  const int n = static_cast<int>(m.size());
  const double logZ = bruteLogZ(m);
  BruteMoments out{Vector::Zero(n), Matrix::Zero(n, n)};
  for (std::uint32_t p = 0; p < (1u << n); ++p) {
    const auto s = spinsOf(p, n);
    const double w = std::exp(halfDoubleSumUtility(m, s) - logZ);
    for (int i = 0; i < n; ++i) {
      out.q(i) += w * s[i];
      for (int j = 0; j < n; ++j) out.Q(i, j) += w * s[i] * s[j];
    }
  }
  return out;
}

/// Minimum total weight over every labelled spanning tree, by decoding all
/// n^(n-2) Pruefer sequences.
inline double bruteForceMstLength(const Matrix& dist) {
  const int n = static_cast<int>(dist.rows());
  if (n == 2) return dist(0, 1);
  const int len = n - 2;
  std::vector<int> seq(len, 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    std::vector<int> degree(n, 1);
    for (int v : seq) ++degree[v];
    double total = 0.0;
    std::vector<int> deg = degree;
    for (int v : seq) {
      int leaf = 0;
      while (deg[leaf] != 1) ++leaf;
      total += dist(leaf, v);
      --deg[leaf];
      --deg[v];
    }
    int u = -1, w = -1;
    for (int k = 0; k < n; ++k)
      if (deg[k] == 1) (u < 0 ? u : w) = k;
    total += dist(u, w);
    best = std::min(best, total);
    int k = 0;
    while (k < len && ++seq[k] == n) seq[k++] = 0;
    if (k == len) break;
  }
  return best;
}

/// Applies the single-site heat-bath kernel at `site` to a full probability
/// vector over 2^N patterns.
inline std::vector<double> applySiteKernel(const CouplingModel& m, const std::vector<double>& p, int site) {
  const int n = static_cast<int>(m.size());
  std::vector<double> out(p.size(), 0.0);
  for (std::uint32_t pat = 0; pat < p.size(); ++pat) {
    const auto s = spinsOf(pat, n);
    double field = m.h(site);
    for (int j = 0; j < n; ++j)
      if (j != site) field += m.J(site, j) * s[j];
    const double up = std::exp(field) / (std::exp(field) + std::exp(-field));
    const std::uint32_t upPat = pat | (1u << site), downPat = pat & ~(1u << site);
    out[upPat] += p[pat] * up;
    out[downPat] += p[pat] * (1.0 - up);
  }
  return out;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= double(x.size());
  my /= double(y.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline std::vector<double> upperTriangle(const Matrix& a) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) out.push_back(a(i, j));
  return out;
}

/// Frobenius distance between off-diagonal parts.
inline double couplingError(const Matrix& a, const Matrix& b) {
  return (maxent::offDiagonal(a) - maxent::offDiagonal(b)).norm();
}

/// Alternating disordered (J = 0) and ordered (uniform J) segments sampled
/// with one sweep between days. Even segments are disordered.
inline maxent::SpinMatrix regimeSwitchData(std::size_t n, std::size_t segmentLength, std::size_t segments,
                                           double orderedCoupling, std::uint64_t seed) {
  std::vector<std::int8_t> buf;
  for (std::size_t s = 0; s < segments; ++s) {
    CouplingModel m = CouplingModel::zeros(n);
    if (s % 2 == 1) {
      m.J.setConstant(orderedCoupling);
      m.J.diagonal().setZero();
    }
    maxent::ChainConfig cc;
    cc.seed = seed + s;
    cc.equilibrationSweeps = 200;
    cc.thinning = 1;
    const auto part = maxent::sampleConfigurations(m, cc, segmentLength);
    for (std::size_t t = 0; t < part.rows(); ++t)
      for (auto v : part.row(t)) buf.push_back(v);
  }
  return maxent::SpinMatrix(CouplingModel::defaultLabels(n), std::move(buf));
}

/// 1 for a window inside an ordered segment, 0 inside a disordered one,
/// -1 when it straddles a boundary.
inline int regimeOf(std::size_t start, std::size_t width, std::size_t segmentLength) {
  const std::size_t a = start / segmentLength, b = (start + width - 1) / segmentLength;
  return a == b ? static_cast<int>(a % 2) : -1;
}

}  // namespace oracle
