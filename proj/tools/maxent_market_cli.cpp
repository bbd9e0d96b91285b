// maxent-market: command-line pipelines over the maxent_market library.
//
// Exit codes: 0 success, 2 input or validation error, 3 numeric
// non-convergence (outputs are still written).

#include <maxent_market/maxent_market.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace maxent;

constexpr int kExitInput = 2;
constexpr int kExitNonConvergence = 3;

struct Options {
  std::vector<std::string> inputs;
  std::string output;
  std::string report;
  std::string model;
  std::string dot;
  std::string method = "rplm";
  std::size_t width = 0;
  std::size_t shift = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string kind = "netOrientation";
  std::size_t smooth = 0;
  bool normalize = false;
  double ridge = 0.0;
  double lambda = 1e-3;
  double tolerance = 1e-6;
  std::size_t maxIterations = 50000;
  std::size_t samples = 10000;
  std::size_t equilibration = 10000;
  std::size_t thinning = 0;
  std::size_t spins = 6;
  double coupling = 0.3;
  double field = 0.1;
  std::size_t segments = 0;
  std::size_t segmentLength = 300;
  double orderedCoupling = 0.5;
  double orderedField = 0.0;
  double binWidth = 0.1;

  // Set after parsing from the matching CLI::Option counts.
  bool seedGiven = false;
  bool ridgeGiven = false;
  bool thinningGiven = false;
  bool widthGiven = false;
  bool shiftGiven = false;
};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Run context shared by every command: the effective configuration, its hash
/// and the seed, all of which are embedded in every output.
class Run {
public:
  Run(std::string command, Json config, std::optional<std::uint64_t> seed, bool seedGenerated = false)
      : command_(std::move(command)), config_(std::move(config)), seed_(seed), seedGenerated_(seedGenerated) {}

  void addInput(const std::string& path, const std::string& content) {
    config_["inputs"].push_back({{"path", path}, {"fnv1a", hex64(fnv1a(content))}});
  }

  Json metadata() const {
    Json m;
    m["tool"] = "maxent-market";
    m["tool_version"] = kToolVersion;
    m["command"] = command_;
    m["config_hash"] = hex64(fnv1a(config_.dump()));
    m["seed"] = seed_ ? Json(*seed_) : Json(nullptr);
    if (seedGenerated_) m["seed_generated"] = true;
    m["config"] = config_;
    return m;
  }

private:
  std::string command_;
  Json config_;
  std::optional<std::uint64_t> seed_;
  bool seedGenerated_;
};

std::string readInput(Run& run, const std::string& path) {
  auto content = readFile(path);
  run.addInput(path, content);
  return content;
}

SpinMatrix loadSpins(Run& run, const std::string& path) {
  std::istringstream in(readInput(run, path));
  return readSpinCsv(in);
}

Json parseJson(const std::string& text, const std::string& path) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string dumpJson(const Json& j) { return j.dump(2, ' ', true) + "\n"; }

std::string sidecar(const std::string& output, const std::string& suffix) { return output + suffix; }

void requireOutput(const Options& o) {
  if (o.output.empty()) throw InputError("--output is required");
}

void requireInput(const Options& o) {
  if (o.inputs.empty()) throw InputError("--input is required");
}

void requireEnumerable(std::size_t n, const char* what) {
  if (n > static_cast<std::size_t>(kMaxEnumerationSpins))
    throw CapacityError(std::string(what) + " enumerates 2^N states and supports N <= " +
                        std::to_string(kMaxEnumerationSpins) + " (got N = " + std::to_string(n) +
                        "); use --method nmf, tap, tanaka or rplm");
}

InversionOptions inversionOptions(const Options& o) {
  InversionOptions opts;
  opts.method = parseMethod(o.method);
  if (o.ridgeGiven) opts.ridge = o.ridge;
  opts.rplmLambda = o.lambda;
  opts.threads = resolveThreads(o.threads);
  opts.validate();
  return opts;
}

Json methodConfig(const Options& o) {
  Json c;
  c["method"] = o.method;
  c["ridge"] = o.ridgeGiven ? Json(o.ridge) : Json(nullptr);
  c["lambda"] = o.lambda;
  return c;
}

struct FittedModel {
  CouplingModel model;
  std::vector<std::string> warnings;
  bool converged = true;
  Json report;
};

/// Fits spin data with --method; "exact" maximizes the likelihood on
/// enumerated moments.
FittedModel fitModel(const SpinMatrix& spins, const Options& o) {
  FittedModel f;
  f.report["method"] = o.method;
  f.report["N"] = spins.cols();
  f.report["T"] = spins.rows();
  if (o.method == "exact") {
    requireEnumerable(spins.cols(), "exact fitting");
    const auto targets = fittingMoments(spins);
    const auto raw = empiricalMoments(spins);
    ExactFitOptions eo;
    eo.tolerance = o.tolerance;
    eo.maxIterations = o.maxIterations;
    const auto fr = fitExact(targets, eo, spins.labels());
    f.model = fr.model;
    f.converged = fr.converged;
    f.report["converged"] = fr.converged;
    f.report["iterations"] = fr.iterations;
    f.report["max_moment_error"] = fr.maxMomentError;
    f.report["tolerance"] = o.tolerance;
    f.report["moments_smoothed"] = targets.q != raw.q || targets.Q != raw.Q;
  } else {
    const auto r = invertSpins(spins, inversionOptions(o));
    f.model = r.model;
    f.warnings = r.warnings;
    f.converged = r.converged;
    f.report["converged"] = r.converged;
    if (parseMethod(o.method) == InversionMethod::rplm) {
      f.report["iterations"] = r.iterations;
      f.report["gradient_norm"] = r.gradientNorm;
    }
  }
  f.report["warnings"] = f.warnings;
  return f;
}

/// A model from a model JSON file, or fitted from a spin CSV.
FittedModel modelFromInput(Run& run, const std::string& path, const Options& o) {
  const auto text = readInput(run, path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    FittedModel f;
    f.model = modelFromJson(parseJson(text, path));
    f.report["source"] = "model";
    return f;
  }
  std::istringstream in(text);
  auto f = fitModel(readSpinCsv(in), o);
  f.report["source"] = "spins";
  return f;
}

std::uint64_t resolveSeed(const Options& o, bool& generated) {
  generated = !o.seedGiven;
  if (o.seedGiven) return o.seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

ChainConfig chainConfig(const Options& o, std::uint64_t seed) {
  ChainConfig cc;
  cc.seed = seed;
  cc.equilibrationSweeps = o.equilibration;
  if (o.thinningGiven) cc.thinning = o.thinning;
  return cc;
}

Json chainConfigJson(const Options& o) {
  Json c;
  c["samples"] = o.samples;
  c["equilibration_sweeps"] = o.equilibration;
  c["thinning_sweeps"] = o.thinningGiven ? Json(o.thinning) : Json("N");
  c["generator"] = Rng::kName;
  return c;
}

Json chainRecord(const Options& o, std::size_t n, std::size_t samples) {
  const std::size_t thin = o.thinningGiven ? o.thinning : n;
  Json c;
  c["generator"] = Rng::kName;
  c["update"] = "heat-bath, random site";
  c["sweep"] = "N single-site updates";
  c["equilibration_sweeps"] = o.equilibration;
  c["thinning_sweeps"] = thin;
  c["samples"] = samples;
  c["single_site_attempts"] = (o.equilibration + samples * thin) * n;
  return c;
}

// ---- commands ------------------------------------------------------------

int runIngest(const Options& o) {
  requireInput(o);
  requireOutput(o);
  Run run("ingest", Json::object(), std::nullopt);
  std::istringstream in(readInput(run, o.inputs.front()));
  const auto r = readPriceCsv(in);
  const auto spins = binarize(r.prices);

  std::ostringstream csv;
  writeSpinCsv(csv, spins);
  writeFile(o.output, csv.str());

  Json report;
  report["labels"] = spins.labels();
  report["rows_read"] = r.rowsRead;
  report["rows_kept"] = spins.rows();
  report["date_range"] = {spins.date(0), spins.date(spins.rows() - 1)};
  report["dropped"] = Json::array();
  for (std::size_t k = 0; k < r.droppedDates.size(); ++k)
    report["dropped"].push_back({{"line", r.droppedLines[k]}, {"date", r.droppedDates[k]}});
  report["metadata"] = run.metadata();
  writeFile(o.report.empty() ? sidecar(o.output, ".report.json") : o.report, dumpJson(report));
  for (std::size_t k = 0; k < r.droppedDates.size(); ++k)
    std::cerr << "dropped line " << r.droppedLines[k] << " (" << r.droppedDates[k] << "): missing value\n";
  return 0;
}

int runFit(const Options& o) {
  requireInput(o);
  requireOutput(o);
  Json config = methodConfig(o);
  if (o.method == "exact") {
    config["tolerance"] = o.tolerance;
    config["max_iterations"] = o.maxIterations;
  }
  Run run("fit", config, std::nullopt);
  const auto spins = loadSpins(run, o.inputs.front());
  const auto f = fitModel(spins, o);

  auto model = modelToJson(f.model, f.warnings);
  model["metadata"] = run.metadata();
  writeFile(o.output, dumpJson(model));
  auto report = f.report;
  report["metadata"] = run.metadata();
  writeFile(o.report.empty() ? sidecar(o.output, ".report.json") : o.report, dumpJson(report));
  for (const auto& w : f.warnings) std::cerr << "warning: " << w << '\n';
  if (!f.converged) {
    std::cerr << "fit did not converge; outputs written\n";
    return kExitNonConvergence;
  }
  return 0;
}

int runSample(const Options& o) {
  requireInput(o);
  requireOutput(o);
  bool generated = false;
  const auto seed = resolveSeed(o, generated);
  Run run("sample", chainConfigJson(o), seed, generated);
  const auto text = readInput(run, o.inputs.front());
  const auto model = modelFromJson(parseJson(text, o.inputs.front()));
  const auto spins = sampleConfigurations(model, chainConfig(o, seed), o.samples);

  std::ostringstream csv;
  writeSpinCsv(csv, spins);
  writeFile(o.output, csv.str());
  Json meta;
  meta["chain"] = chainRecord(o, model.size(), o.samples);
  meta["moments"] = momentsToJson(empiricalMoments(spins));
  meta["metadata"] = run.metadata();
  writeFile(o.report.empty() ? sidecar(o.output, ".meta.json") : o.report, dumpJson(meta));
  return 0;
}

Json klJson(const KlResult& k) { return {{"value", k.value}, {"out_of_support", k.outOfSupport}}; }

int runDiagnose(const Options& o) {
  requireInput(o);
  requireOutput(o);
  Json config;
  if (o.model.empty()) {
    config["model"] = "exact fit of the input";
    config["tolerance"] = o.tolerance;
    config["max_iterations"] = o.maxIterations;
  }
  Run run("diagnose", config, std::nullopt);
  const auto spins = loadSpins(run, o.inputs.front());
  requireEnumerable(spins.cols(), "diagnostics");

  FittedModel f;
  if (o.model.empty()) {
    Options exact = o;
    exact.method = "exact";
    f = fitModel(spins, exact);
  } else {
    f.model = modelFromJson(parseJson(readInput(run, o.model), o.model));
  }
  const auto r = informationReport(spins, f.model);

  Json out;
  out["N"] = spins.cols();
  out["T"] = spins.rows();
  out["entropy_independent"] = r.entropyIndependent;
  out["entropy_pairwise"] = r.entropyPairwise;
  out["entropy_data"] = r.entropyData;
  out["kl_pairwise_data"] = klJson(r.klPairwiseData);
  out["kl_data_pairwise"] = klJson(r.klDataPairwise);
  out["kl_independent_data"] = klJson(r.klIndependentData);
  out["multi_information"] = r.info.IN;
  out["pairwise_information"] = r.info.I2;
  out["ratio"] = r.info.ratio ? Json(*r.info.ratio) : Json(nullptr);
  if (o.model.empty()) out["fit"] = f.report;
  out["metadata"] = run.metadata();
  writeFile(o.output, dumpJson(out));
  if (!f.converged) {
    std::cerr << "model fit did not converge; outputs written\n";
    return kExitNonConvergence;
  }
  return 0;
}

constexpr const char* kDistanceMap =
    "d_ij = sqrt(2 (1 - J_ij / max|J_kl|)); stand-in map from couplings to distances";

/// Width and shift used when the flags are absent.
std::pair<std::size_t, std::size_t> defaultWindow(const std::string& kind) {
  if (kind == "orientationHistogram") return {25, 25};
  if (kind == "aggregatePreference") return {200, 2};
  if (kind == "traceDeviation") return {200, 5};
  if (kind == "mstLengthDeviation") return {100, 10};
  return {300, 1};
}

int runHistogram(const Options& o, Run& run, const SpinMatrix& spins, const WindowSpec& spec) {
  const auto hs = orientationHistogram(spins, spec, o.binWidth);
  Json out;
  out["windows"] = Json::array();
  for (const auto& h : hs) {
    out["windows"].push_back({{"window_start", spins.hasDates() ? spins.date(h.windowStart)
                                                                : std::to_string(h.windowStart)},
                              {"bin_edges", h.binEdges},
                              {"counts", h.counts},
                              {"mode_count", h.modeCount},
                              {"mode_centers", h.modeCenters}});
  }
  out["metadata"] = run.metadata();
  writeFile(o.output, dumpJson(out));
  return 0;
}

int runWindow(const Options& o) {
  requireInput(o);
  requireOutput(o);
  const auto [defaultWidth, defaultShift] = defaultWindow(o.kind);
  const WindowSpec spec{o.widthGiven ? o.width : defaultWidth, o.shiftGiven ? o.shift : defaultShift};
  Json config;
  config["kind"] = o.kind;
  config["width"] = spec.width;
  config["shift"] = spec.shift;
  if (o.kind == "orientationHistogram") {
    config["bin_width"] = o.binWidth;
    Run run("window", config, std::nullopt);
    const auto spins = loadSpins(run, o.inputs.front());
    return runHistogram(o, run, spins, spec);
  }
  const auto kind = parseKind(o.kind);
  const bool fitted = kind == SeriesKind::aggregatePreference || kind == SeriesKind::traceDeviation ||
                      kind == SeriesKind::mstLengthDeviation;
  if (fitted) {
    config.update(methodConfig(o));
    if (kind == SeriesKind::traceDeviation) config["method"] = "tanaka";
  }
  config["smooth_half_width"] = o.smooth;
  config["normalize"] = o.normalize;
  Run run("window", config, std::nullopt);
  const auto spins = loadSpins(run, o.inputs.front());
  spec.validate(spins.rows());

  InversionOptions opts;
  if (fitted) {
    Options m = o;
    if (kind == SeriesKind::traceDeviation) m.method = "tanaka";
    opts = inversionOptions(m);
  }
  const unsigned threads = resolveThreads(o.threads);
  TimeSeriesReport r;
  switch (kind) {
    case SeriesKind::netOrientation: r = netOrientationSeries(spins, spec, threads); break;
    case SeriesKind::mfEntropy: r = mfEntropySeries(spins, spec, threads); break;
    case SeriesKind::aggregatePreference: r = aggregatePreferenceSeries(spins, spec, opts); break;
    case SeriesKind::traceDeviation: r = traceDeviationSeries(spins, spec, opts); break;
    case SeriesKind::mstLengthDeviation: r = mstLengthSeries(spins, spec, opts); break;
  }
  // Smoothing first, then normalization.
  if (o.smooth > 0) r = smoothSeries(r, o.smooth);
  if (o.normalize) r = normalizeSeries(r);

  Json meta = run.metadata();
  meta["kind"] = kindName(r.kind);
  meta["windows"] = r.values.size();
  meta["smoothing_half_width"] = r.smoothingHalfWidth;
  meta["normalized"] = r.normalized;
  meta["zero_variance"] = r.zeroVariance;
  meta["order"] = "smooth, then normalize";
  meta["gaps"] = Json::array();
  for (const auto& [k, reason] : r.gapReasons)
    meta["gaps"].push_back({{"window_start", r.startLabels[k]}, {"reason", reason}});
  if (kind == SeriesKind::mstLengthDeviation) meta["distance_map"] = kDistanceMap;
  std::ostringstream out;
  writeSeriesCsv(out, r, meta);
  writeFile(o.output, out.str());
  for (const auto& [k, reason] : r.gapReasons)
    std::cerr << "gap at window " << r.startLabels[k] << ": " << reason << '\n';
  return 0;
}

std::string replaceExtension(const std::string& path, const std::string& ext) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return path.substr(0, dot) + ext;
  return path + ext;
}

int runMst(const Options& o) {
  requireInput(o);
  requireOutput(o);
  Run run("mst", methodConfig(o), std::nullopt);
  const auto f = modelFromInput(run, o.inputs.front(), o);
  const auto tree = minimumSpanningTree(couplingToDistance(f.model));

  const auto meta = run.metadata();
  auto j = treeToJson(tree, f.model.labels);
  j["distance_map"] = kDistanceMap;
  if (f.report.contains("method")) j["fit"] = f.report;
  j["metadata"] = meta;
  writeFile(o.output, dumpJson(j));
  std::string dot = "// maxent-market " + std::string(kToolVersion) + " config_hash=" +
                    meta["config_hash"].get<std::string>() + "\n// distance map: " + kDistanceMap + "\n";
  dot += exportDot(tree, f.model.labels);
  writeFile(o.dot.empty() ? replaceExtension(o.output, ".dot") : o.dot, dot);
  if (!f.converged) {
    std::cerr << "model fit did not converge; outputs written\n";
    return kExitNonConvergence;
  }
  return 0;
}

int runDegrees(const Options& o) {
  requireInput(o);
  requireOutput(o);
  Run run("degrees", methodConfig(o), std::nullopt);
  std::map<std::size_t, double> freqs;
  Json sources = Json::array();
  bool allConverged = true;
  for (const auto& path : o.inputs) {
    const auto text = readInput(run, path);
    const auto first = text.find_first_not_of(" \t\r\n");
    Json source{{"path", path}};
    std::optional<Tree> tree;
    if (first != std::string::npos && text[first] == '{') {
      const auto j = parseJson(text, path);
      if (j.contains("frequencies")) {
        for (const auto& [deg, count] : j.at("frequencies").items()) {
          std::size_t d = 0;
          try {
            d = std::stoul(deg);
          } catch (const std::exception&) {
            throw InputError("'" + path + "': degree key '" + deg + "' is not an integer");
          }
          if (!count.is_number()) throw InputError("'" + path + "': frequency of degree " + deg + " is not a number");
          freqs[d] += count.get<double>();
        }
        source["type"] = "frequencies";
      } else if (j.contains("nodes")) {
        tree = treeFromJson(j).first;
        source["type"] = "tree";
      } else {
        tree = minimumSpanningTree(couplingToDistance(modelFromJson(j)));
        source["type"] = "model";
      }
    } else {
      std::istringstream in(text);
      const auto f = fitModel(readSpinCsv(in), o);
      allConverged = allConverged && f.converged;
      tree = minimumSpanningTree(couplingToDistance(f.model));
      source["type"] = "spins";
      source["fit"] = f.report;
    }
    if (tree) {
      std::size_t sum = 0;
      for (auto d : tree->degrees()) sum += d;
      for (const auto& [d, c] : degreeDistribution(*tree)) freqs[d] += double(c);
      source["vertices"] = tree->vertices;
      source["degree_sum"] = sum;
      source["handshake"] = sum == 2 * tree->edges.size();
    }
    sources.push_back(std::move(source));
  }
  const auto fit = fitPowerLaw(freqs);
  Json out;
  out["sources"] = std::move(sources);
  out["frequencies"] = Json::object();
  for (const auto& [d, c] : freqs) out["frequencies"][std::to_string(d)] = c;
  out["power_law"] = {{"alpha", fit.alpha}, {"alpha_stderr", fit.alphaStdErr}, {"r2", fit.r2},
                      {"points_used", fit.pointsUsed}};
  out["metadata"] = run.metadata();
  writeFile(o.output, dumpJson(out));
  if (!allConverged) {
    std::cerr << "model fit did not converge; outputs written\n";
    return kExitNonConvergence;
  }
  return 0;
}

/// Alternating disordered (J = 0, h = 0) and ordered (uniform J, uniform h)
/// segments, each sampled from its own chain.
SpinMatrix regimeSwitchSpins(const Options& o, std::uint64_t seed) {
  std::vector<std::int8_t> buf;
  for (std::size_t s = 0; s < o.segments; ++s) {
    CouplingModel m = CouplingModel::zeros(o.spins);
    if (s % 2 == 1) {
      m.J.setConstant(o.orderedCoupling);
      m.J.diagonal().setZero();
      m.h.setConstant(o.orderedField);
    }
    auto cc = chainConfig(o, seed + s);
    const auto part = sampleConfigurations(m, cc, o.segmentLength);
    for (std::size_t t = 0; t < part.rows(); ++t)
      for (auto v : part.row(t)) buf.push_back(v);
  }
  return SpinMatrix(CouplingModel::defaultLabels(o.spins), std::move(buf));
}

int runSynth(const Options& o) {
  requireOutput(o);
  bool generated = false;
  const auto seed = resolveSeed(o, generated);
  Json config = chainConfigJson(o);
  config["N"] = o.spins;
  if (o.segments > 0) {
    config["segments"] = o.segments;
    config["segment_length"] = o.segmentLength;
    config["ordered_coupling"] = o.orderedCoupling;
    config["ordered_field"] = o.orderedField;
    config.erase("samples");
  } else {
    config["coupling_scale"] = o.coupling;
    config["field_scale"] = o.field;
  }
  Run run("synth", config, seed, generated);

  Json meta;
  SpinMatrix spins = [&] {
    if (o.segments > 0) {
      meta["chain"] = chainRecord(o, o.spins, o.segmentLength);
      meta["chain"]["chains"] = o.segments;
      meta["chain"]["seeds"] = "seed + segment index";
      return regimeSwitchSpins(o, seed);
    }
    const auto model = makeSyntheticModel(o.spins, o.coupling, o.field, seed);
    if (!o.model.empty()) {
      auto mj = modelToJson(model);
      mj["metadata"] = run.metadata();
      writeFile(o.model, dumpJson(mj));
    }
    // The chain draws from a stream distinct from the model's.
    meta["chain"] = chainRecord(o, o.spins, o.samples);
    meta["chain"]["seed"] = seed ^ 0x9e3779b97f4a7c15ull;
    return sampleConfigurations(model, chainConfig(o, seed ^ 0x9e3779b97f4a7c15ull), o.samples);
  }();

  std::ostringstream csv;
  writeSpinCsv(csv, spins);
  writeFile(o.output, csv.str());
  meta["metadata"] = run.metadata();
  writeFile(o.report.empty() ? sidecar(o.output, ".meta.json") : o.report, dumpJson(meta));
  return 0;
}

// ---- argument wiring ----------------------------------------------------

/// Options registered on several subcommands; only the parsed one counts.
struct Flags {
  std::vector<CLI::Option*> seed, ridge, thinning;

  static bool given(const std::vector<CLI::Option*>& opts) {
    return std::any_of(opts.begin(), opts.end(), [](const CLI::Option* op) { return op->count() > 0; });
  }
};

void addIo(CLI::App* sub, Options& o, bool inputRequired = true, bool multipleInputs = false) {
  if (multipleInputs)
    sub->add_option("--input,-i", o.inputs, "input files (repeatable)")->required(inputRequired);
  else
    sub->add_option("--input,-i", o.inputs, "input file")->required(inputRequired)->expected(1);
  sub->add_option("--output,-o", o.output, "output file")->required();
}

void addMethod(CLI::App* sub, Options& o, Flags& f, bool allowExact) {
  std::vector<std::string> methods = {"nmf", "tap", "tanaka", "rplm"};
  if (allowExact) methods.insert(methods.begin(), "exact");
  sub->add_option("--method", o.method, "inversion method")->check(CLI::IsMember(methods))->capture_default_str();
  f.ridge.push_back(sub->add_option("--ridge", o.ridge, "covariance ridge (default 1e-8 tr(C)/N)"));
  sub->add_option("--lambda", o.lambda, "rPLM L2 penalty")->capture_default_str();
  sub->add_option("--threads", o.threads, "worker cap (fallback MAXENT_MARKET_THREADS)");
}

void addExactFit(CLI::App* sub, Options& o) {
  sub->add_option("--tolerance", o.tolerance, "exact-fit max moment error")->capture_default_str();
  sub->add_option("--max-iterations", o.maxIterations, "exact-fit iteration cap")->capture_default_str();
}

void addChain(CLI::App* sub, Options& o, Flags& f) {
  f.seed.push_back(sub->add_option("--seed", o.seed, "generator seed (generated and recorded if absent)"));
  sub->add_option("--samples", o.samples, "configurations to draw")->capture_default_str();
  sub->add_option("--equilibration", o.equilibration, "burn-in sweeps")->capture_default_str();
  f.thinning.push_back(sub->add_option("--thinning", o.thinning, "sweeps between samples (default N)"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise maximum-entropy models of binarized market data"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "", "TOML config file; command-line flags override it");
  app.require_subcommand(1);

  Options o;
  Flags f;

  auto* ingest = app.add_subcommand("ingest", "price CSV -> spin CSV and drop report");
  addIo(ingest, o);
  ingest->add_option("--report", o.report, "report path (default <output>.report.json)");

  auto* fit = app.add_subcommand("fit", "spin CSV -> model JSON and fit report");
  addIo(fit, o);
  addMethod(fit, o, f, true);
  addExactFit(fit, o);
  fit->add_option("--report", o.report, "report path (default <output>.report.json)");

  auto* sample = app.add_subcommand("sample", "model JSON -> sampled spin CSV");
  addIo(sample, o);
  addChain(sample, o, f);
  sample->add_option("--report", o.report, "metadata path (default <output>.meta.json)");

  auto* diagnose = app.add_subcommand("diagnose", "entropies, divergences and multi-information");
  addIo(diagnose, o);
  diagnose->add_option("--model", o.model, "model JSON (default: exact fit of the input)");
  addExactFit(diagnose, o);

  auto* window = app.add_subcommand("window", "sliding-window series CSV");
  addIo(window, o);
  window->add_option("--kind", o.kind, "series kind")
      ->check(CLI::IsMember({"netOrientation", "mfEntropy", "aggregatePreference", "traceDeviation",
                             "mstLengthDeviation", "orientationHistogram"}))
      ->capture_default_str();
  auto* width = window->add_option("--width", o.width, "window width in days (default depends on --kind)");
  auto* shift = window->add_option("--shift", o.shift, "window shift in days (default depends on --kind)");
  window->add_option("--smooth", o.smooth, "moving-average half-width (0 = off)")->capture_default_str();
  window->add_flag("--normalize", o.normalize, "standardize to zero mean, unit variance");
  window->add_option("--bin-width", o.binWidth, "orientationHistogram bin width")->capture_default_str();
  addMethod(window, o, f, false);

  auto* mst = app.add_subcommand("mst", "model JSON or spin CSV -> MST as JSON and DOT");
  addIo(mst, o);
  mst->add_option("--dot", o.dot, "DOT path (default <output> with .dot)");
  addMethod(mst, o, f, true);
  addExactFit(mst, o);

  auto* degrees = app.add_subcommand("degrees", "degree frequencies and power-law fit");
  addIo(degrees, o, true, true);
  addMethod(degrees, o, f, true);
  addExactFit(degrees, o);

  auto* synth = app.add_subcommand("synth", "synthetic spin data from a random or regime-switch model");
  addIo(synth, o, false);
  addChain(synth, o, f);
  synth->add_option("--spins,-n", o.spins, "number of spins N")->capture_default_str();
  synth->add_option("--coupling", o.coupling, "J_ij ~ U(0, coupling)")->capture_default_str();
  synth->add_option("--field", o.field, "h_i ~ U(-field, field)")->capture_default_str();
  synth->add_option("--model", o.model, "also write the generating model JSON");
  synth->add_option("--segments", o.segments, "regime-switch segments (0 = random model)")->capture_default_str();
  synth->add_option("--segment-length", o.segmentLength, "days per segment")->capture_default_str();
  synth->add_option("--ordered-coupling", o.orderedCoupling, "uniform J of ordered segments")->capture_default_str();
  synth->add_option("--ordered-field", o.orderedField, "uniform h of ordered segments")->capture_default_str();
  synth->add_option("--report", o.report, "metadata path (default <output>.meta.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }
  o.seedGiven = Flags::given(f.seed);
  o.thinningGiven = Flags::given(f.thinning);
  o.ridgeGiven = Flags::given(f.ridge);
  o.widthGiven = width->count() > 0;
  o.shiftGiven = shift->count() > 0;

  try {
    if (*ingest) return runIngest(o);
    if (*fit) return runFit(o);
    if (*sample) return runSample(o);
    if (*diagnose) return runDiagnose(o);
    if (*window) return runWindow(o);
    if (*mst) return runMst(o);
    if (*degrees) return runDegrees(o);
    if (*synth) return runSynth(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
