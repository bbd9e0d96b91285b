#pragma once

// Heat-bath Glauber dynamics at unit temperature.

#include "core.hpp"
#include "model.hpp"
#include "spin_data.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace maxent {

struct ChainConfig {
  std::uint64_t seed = 1;
  std::size_t equilibrationSweeps = 10000;
  std::size_t measureSweeps = 200000;
  /// Sweeps between retained samples; unset means N.
  std::optional<std::size_t> thinning;

  std::size_t thinningFor(std::size_t n) const {
    const std::size_t t = thinning.value_or(n);
    if (t < 1) throw InputError("thinning must be >= 1");
    return t;
  }
};

struct SampleSummary {
  MomentSet moments;
  std::size_t retainedSamples = 0;
  double acceptanceRate = 0.0;
  /// Batch-means standard errors of q and Q.
  Vector qStdErr;
  Matrix QStdErr;
};

/// P(s_i = +1 | rest) = 1 / (1 + exp(-2 L_i)).
inline double upProbability(double localField) { return 1.0 / (1.0 + std::exp(-2.0 * localField)); }

/// Resamples spin `site` from its conditional distribution. Returns true when
/// the spin changed.
inline bool heatBathUpdate(const CouplingModel& model, std::span<std::int8_t> state,
                           std::size_t site, Rng& rng) {
  const double p = upProbability(model.localField(std::span<const std::int8_t>(state), site));
  const std::int8_t next = rng.uniform() < p ? 1 : -1;
  const bool changed = next != state[site];
  state[site] = next;
  return changed;
}

/// One Glauber move: a uniformly chosen site is resampled. Returns the site.
inline std::size_t glauberStep(const CouplingModel& model, std::span<std::int8_t> state, Rng& rng) {
  if (state.size() != model.size()) throw InputError("state length does not match model N");
  const std::size_t site = rng.below(state.size());
  heatBathUpdate(model, state, site, rng);
  return site;
}

namespace detail {

class Chain {
public:
  Chain(const CouplingModel& model, std::uint64_t seed) : model_(model), rng_(seed), state_(model.size()) {
    for (auto& s : state_) s = rng_.uniform() < 0.5 ? 1 : -1;
  }

  void sweep() {
    const std::size_t n = state_.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t site = rng_.below(n);
      changed_ += heatBathUpdate(model_, state_, site, rng_) ? 1 : 0;
      ++attempts_;
    }
  }

  const std::vector<std::int8_t>& state() const { return state_; }
  double acceptance() const { return attempts_ ? double(changed_) / double(attempts_) : 0.0; }
  void resetCounters() { changed_ = attempts_ = 0; }

private:
  const CouplingModel& model_;
  Rng rng_;
  std::vector<std::int8_t> state_;
  std::size_t changed_ = 0, attempts_ = 0;
};

}  // namespace detail

inline SampleSummary sampleMoments(const CouplingModel& model, const ChainConfig& config) {
  model.validate();
  const std::size_t n = model.size();
  const std::size_t thin = config.thinningFor(n);
  detail::Chain chain(model, config.seed);
  for (std::size_t s = 0; s < config.equilibrationSweeps; ++s) chain.sweep();
  chain.resetCounters();

  SampleSummary out;
  out.retainedSamples = config.measureSweeps / thin;
  const std::size_t batches = std::min<std::size_t>(32, std::max<std::size_t>(out.retainedSamples, 1));
  const std::size_t perBatch = std::max<std::size_t>(out.retainedSamples / batches, 1);

  std::vector<long long> first(n, 0), second(n * n, 0), batchFirst(n, 0), batchSecond(n * n, 0);
  std::vector<Vector> batchQ;
  std::vector<Matrix> batchPair;
  std::size_t inBatch = 0;
  for (std::size_t k = 0; k < out.retainedSamples; ++k) {
    for (std::size_t s = 0; s < thin; ++s) chain.sweep();
    const auto& st = chain.state();
    for (std::size_t i = 0; i < n; ++i) {
      first[i] += st[i];
      batchFirst[i] += st[i];
      for (std::size_t j = i + 1; j < n; ++j) {
        second[i * n + j] += st[i] * st[j];
        batchSecond[i * n + j] += st[i] * st[j];
      }
    }
    if (++inBatch == perBatch && batchQ.size() < batches) {
      Vector bq(n);
      Matrix bQ = Matrix::Identity(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        bq(i) = double(batchFirst[i]) / double(perBatch);
        for (std::size_t j = i + 1; j < n; ++j)
          bQ(i, j) = bQ(j, i) = double(batchSecond[i * n + j]) / double(perBatch);
      }
      batchQ.push_back(std::move(bq));
      batchPair.push_back(std::move(bQ));
      std::fill(batchFirst.begin(), batchFirst.end(), 0);
      std::fill(batchSecond.begin(), batchSecond.end(), 0);
      inBatch = 0;
    }
  }

  auto& m = out.moments;
  m.q = Vector::Zero(n);
  m.Q = Matrix::Identity(n, n);
  m.sampleCount = out.retainedSamples;
  if (out.retainedSamples > 0) {
    const double inv = 1.0 / double(out.retainedSamples);
    for (std::size_t i = 0; i < n; ++i) {
      m.q(i) = first[i] * inv;
      for (std::size_t j = i + 1; j < n; ++j) m.Q(i, j) = m.Q(j, i) = second[i * n + j] * inv;
    }
  }
  out.qStdErr = Vector::Zero(n);
  out.QStdErr = Matrix::Zero(n, n);
  const std::size_t B = batchQ.size();
  if (B >= 2) {
    Vector meanQ = Vector::Zero(n);
    Matrix meanPair = Matrix::Zero(n, n);
    for (std::size_t b = 0; b < B; ++b) {
      meanQ += batchQ[b];
      meanPair += batchPair[b];
    }
    meanQ /= double(B);
    meanPair /= double(B);
    for (std::size_t b = 0; b < B; ++b) {
      out.qStdErr += (batchQ[b] - meanQ).array().square().matrix();
      out.QStdErr += (batchPair[b] - meanPair).array().square().matrix();
    }
    const double norm = 1.0 / (double(B) * double(B - 1));
    out.qStdErr = (out.qStdErr * norm).cwiseSqrt();
    out.QStdErr = (out.QStdErr * norm).cwiseSqrt();
  }
  out.acceptanceRate = chain.acceptance();
  return out;
}

/// `count` configurations, each `thinning` sweeps after the previous one,
/// following equilibration. measureSweeps is not used.
inline SpinMatrix sampleConfigurations(const CouplingModel& model, const ChainConfig& config,
                                       std::size_t count) {
  model.validate();
  if (count < 1) throw InputError("sample count must be >= 1");
  const std::size_t n = model.size();
  const std::size_t thin = config.thinningFor(n);
  detail::Chain chain(model, config.seed);
  for (std::size_t s = 0; s < config.equilibrationSweeps; ++s) chain.sweep();
  std::vector<std::int8_t> out;
  out.reserve(count * n);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t s = 0; s < thin; ++s) chain.sweep();
    out.insert(out.end(), chain.state().begin(), chain.state().end());
  }
  return SpinMatrix(model.labels, std::move(out));
}

/// J_ij ~ U(0, couplingScale) (symmetric, zero diagonal), h_i ~ U(-fieldScale, fieldScale).
/// Upper-triangle couplings are drawn row by row, then the fields.
inline CouplingModel makeSyntheticModel(std::size_t n, double couplingScale, double fieldScale,
                                        std::uint64_t seed) {
  if (n < 1) throw InputError("synthetic model needs N >= 1");
  if (couplingScale < 0.0 || fieldScale < 0.0) throw InputError("scales must be >= 0");
  Rng rng(seed);
  CouplingModel m = CouplingModel::zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.J(i, j) = m.J(j, i) = rng.uniform(0.0, couplingScale);
  for (std::size_t i = 0; i < n; ++i) m.h(i) = rng.uniform(-fieldScale, fieldScale);
  return m;
}

}  // namespace maxent
