#pragma once

// Exhaustive enumeration for small N: partition function, moments, entropy,
// divergences, multi-information and exact moment-matching fits.

#include "core.hpp"
#include "model.hpp"
#include "spin_data.hpp"

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace maxent {

inline constexpr int kMaxEnumerationSpins = 25;

/// Anything that assigns probabilities to N-bit configuration patterns and can
/// list the patterns it gives nonzero mass to.
template <class D>
concept ConfigurationDistribution = requires(const D& d, std::uint32_t pattern) {
  { d.spinCount() } -> std::convertible_to<int>;
  { d.probability(pattern) } -> std::convertible_to<double>;
  d.forEachSupport([](std::uint32_t, double) {});
};

/// Full Gibbs table over all 2^N patterns (bit b set means s_b = +1).
struct ModelDistribution {
  CouplingModel model;
  double logZ = 0.0;
  std::vector<double> probabilities;
  std::vector<double> utilities;

  int spinCount() const { return static_cast<int>(model.size()); }
  double probability(std::uint32_t pattern) const { return probabilities[pattern]; }

  template <class Fn>
  void forEachSupport(Fn&& fn) const {
    for (std::uint32_t p = 0; p < probabilities.size(); ++p)
      if (probabilities[p] > 0.0) fn(p, probabilities[p]);
  }
};

inline void checkEnumerable(std::size_t n) {
  if (n > static_cast<std::size_t>(kMaxEnumerationSpins))
    throw CapacityError("exact enumeration limited to N <= " + std::to_string(kMaxEnumerationSpins) +
                        " (got N = " + std::to_string(n) +
                        "); use the sampler or an approximate inversion (nmf, tap, tanaka, rplm)");
}

inline ModelDistribution enumerate(const CouplingModel& model) {
  const std::size_t n = model.size();
  checkEnumerable(n);
  const std::size_t states = std::size_t{1} << n;
  ModelDistribution d;
  d.model = model;
  d.utilities.resize(states);

  // Pattern 0 is all -1. Pattern p with top bit b is p - 2^b with s_b raised
  // from -1 to +1; spins above b are still -1.
  double u0 = -model.h.sum();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) u0 += model.J(i, j);
  d.utilities[0] = u0;
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t base = std::size_t{1} << b;
    double above = 0.0;
    for (std::size_t j = b + 1; j < n; ++j) above += model.J(b, j);
    for (std::size_t low = 0; low < base; ++low) {
      double field = model.h(b) - above;
      for (std::size_t j = 0; j < b; ++j) field += (low >> j) & 1u ? model.J(b, j) : -model.J(b, j);
      d.utilities[base + low] = d.utilities[low] + 2.0 * field;
    }
  }

  double top = -std::numeric_limits<double>::infinity();
  for (double u : d.utilities) top = std::max(top, u);
  double sum = 0.0;
  for (double u : d.utilities) sum += std::exp(u - top);
  d.logZ = top + std::log(sum);
  d.probabilities.resize(states);
  for (std::size_t p = 0; p < states; ++p) d.probabilities[p] = std::exp(d.utilities[p] - d.logZ);
  return d;
}

inline MomentSet modelMoments(const ModelDistribution& dist) {
  const int n = dist.spinCount();
  MomentSet m;
  m.q = Vector::Zero(n);
  m.Q = Matrix::Identity(n, n);
  m.sampleCount = 0;
  std::vector<double> s(static_cast<std::size_t>(n));
  Matrix upper = Matrix::Zero(n, n);
  for (std::size_t p = 0; p < dist.probabilities.size(); ++p) {
    const double w = dist.probabilities[p];
    for (int b = 0; b < n; ++b) s[b] = (p >> b) & 1u ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i) {
      m.q(i) += w * s[i];
      const double ws = w * s[i];
      for (int j = i + 1; j < n; ++j) upper(i, j) += ws * s[j];
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m.Q(i, j) = m.Q(j, i) = upper(i, j);
  return m;
}

/// Shannon entropy in nats.
template <ConfigurationDistribution D>
double entropy(const D& dist) {
  double s = 0.0;
  dist.forEachSupport([&](std::uint32_t, double p) { s -= p * std::log(p); });
  return s;
}

struct KlResult {
  double value = 0.0;
  /// P puts mass where Q has none; value is +infinity.
  bool outOfSupport = false;
};

/// D(P || Q) = sum_s P(s) ln(P(s)/Q(s)).
template <ConfigurationDistribution P, ConfigurationDistribution Q>
KlResult klDivergence(const P& p, const Q& q) {
  if (p.spinCount() != q.spinCount())
    throw InputError("KL divergence between distributions of different N");
  KlResult r;
  p.forEachSupport([&](std::uint32_t pattern, double pp) {
    const double qq = q.probability(pattern);
    if (qq <= 0.0) {
      r.outOfSupport = true;
      return;
    }
    r.value += pp * std::log(pp / qq);
  });
  if (r.outOfSupport) r.value = std::numeric_limits<double>::infinity();
  else r.value = std::max(0.0, r.value);
  return r;
}

/// J = 0, h_i = atanh(q_i).
inline CouplingModel fitIndependent(const MomentSet& targets,
                                    std::vector<std::string> labels = {}) {
  const auto n = targets.size();
  if (labels.empty()) labels = CouplingModel::defaultLabels(n);
  Vector h(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(targets.q(i)) >= 1.0)
      throw DegenerateError("mean orientation of spin " + std::to_string(i) +
                            " is saturated (|q| = 1); smooth the moments first");
    h(i) = std::atanh(targets.q(i));
  }
  return {std::move(labels), Matrix::Zero(n, n), std::move(h)};
}

struct FitReport {
  CouplingModel model;
  std::size_t iterations = 0;
  double maxMomentError = 0.0;
  bool converged = false;
};

struct ExactFitOptions {
  double tolerance = 1e-6;
  std::size_t maxIterations = 50000;
  double step = 0.1;
};

/// Gradient ascent on the (concave) log-likelihood using enumerated moments.
/// A step that increases the moment mismatch is undone and the step halved.
inline FitReport fitExact(const MomentSet& targets, const ExactFitOptions& options = {},
                          std::vector<std::string> labels = {}) {
  const std::size_t n = targets.size();
  checkEnumerable(n);
  if (targets.saturated())
    throw DegenerateError("saturated target moments; apply pseudocount smoothing before fitting");

  FitReport report;
  report.model = fitIndependent(targets, std::move(labels));
  CouplingModel current = report.model;
  double step = options.step;
  double previousError = std::numeric_limits<double>::infinity();
  CouplingModel previous = current;
  MomentSet previousMoments;

  for (std::size_t it = 0;; ++it) {
    MomentSet m = modelMoments(enumerate(current));
    double err = targets.maxAbsDifference(m);
    if (err > previousError && step > 1e-8) {
      current = previous;
      m = previousMoments;
      err = previousError;
      step *= 0.5;
    }
    report.model = current;
    report.iterations = it;
    report.maxMomentError = err;
    if (err <= options.tolerance) {
      report.converged = true;
      return report;
    }
    if (it >= options.maxIterations) return report;

    previous = current;
    previousMoments = m;
    previousError = err;
    current.h += step * (targets.q - m.q);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        current.J(i, j) += step * (targets.Q(i, j) - m.Q(i, j));
        current.J(j, i) = current.J(i, j);
      }
  }
}

struct MultiInformation {
  double IN = 0.0;  // S(P_1) - S(P_data)
  double I2 = 0.0;  // S(P_1) - S(P_2)
  std::optional<double> ratio;  // empty when I_N < 1e-12
};

struct InformationReport {
  double entropyIndependent = 0.0;
  double entropyPairwise = 0.0;
  double entropyData = 0.0;
  KlResult klPairwiseData;     // D(P_2 || P_data)
  KlResult klDataPairwise;     // D(P_data || P_2)
  KlResult klIndependentData;  // D(P_1 || P_data)
  MultiInformation info;
};

/// Entropies, divergences and multi-information of data against a pairwise
/// model. P_1 is the independent model on the data's (smoothed if saturated)
/// mean orientations.
inline InformationReport informationReport(const SpinMatrix& spins,
                                           const CouplingModel& pairwiseModel) {
  if (pairwiseModel.size() != spins.cols())
    throw InputError("model N does not match data N");
  checkEnumerable(spins.cols());
  const auto data = empiricalDistribution(spins);
  const auto p1 = enumerate(fitIndependent(fittingMoments(spins), spins.labels()));
  const auto p2 = enumerate(pairwiseModel);
  InformationReport r;
  r.entropyIndependent = entropy(p1);
  r.entropyPairwise = entropy(p2);
  r.entropyData = entropy(data);
  r.klPairwiseData = klDivergence(p2, data);
  r.klDataPairwise = klDivergence(data, p2);
  r.klIndependentData = klDivergence(p1, data);
  r.info.IN = r.entropyIndependent - r.entropyData;
  r.info.I2 = r.entropyIndependent - r.entropyPairwise;
  if (r.info.IN >= 1e-12) r.info.ratio = r.info.I2 / r.info.IN;
  return r;
}

inline MultiInformation multiInformation(const SpinMatrix& spins,
                                         const CouplingModel& pairwiseModel) {
  return informationReport(spins, pairwiseModel).info;
}

}  // namespace maxent
