#pragma once

// Price ingestion, binarization into spins, empirical moments and
// configuration distributions, and sliding-window views.

#include "core.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace maxent {

/// Upper bound on N for configuration tables keyed by a 32-bit pattern.
inline constexpr int kMaxDistributionSpins = 26;

struct PriceSeries {
  std::vector<std::string> labels;
  std::vector<std::string> dates;
  Matrix open;   // T x N
  Matrix close;  // T x N

  std::size_t days() const { return static_cast<std::size_t>(open.rows()); }
  std::size_t assets() const { return static_cast<std::size_t>(open.cols()); }

  /// Throws InputError naming the first violated invariant.
  void validate() const {
    if (open.rows() != close.rows() || open.cols() != close.cols())
      throw InputError("open and close matrices differ in shape");
    if (labels.size() != assets())
      throw InputError("label count does not match price columns");
    if (!dates.empty() && dates.size() != days())
      throw InputError("date count does not match price rows");
    std::unordered_set<std::string> seen;
    for (const auto& l : labels)
      if (!seen.insert(l).second) throw InputError("duplicate asset label '" + l + "'");
    for (std::size_t t = 1; t < dates.size(); ++t)
      if (!(dates[t - 1] < dates[t]))
        throw InputError("dates not strictly increasing at row " + std::to_string(t + 1) + " (" +
                         dates[t] + ")");
    for (Eigen::Index t = 0; t < open.rows(); ++t)
      for (Eigen::Index i = 0; i < open.cols(); ++i)
        for (double p : {open(t, i), close(t, i)})
          if (!std::isfinite(p) || p <= 0.0)
            throw InputError("nonpositive or nonfinite price at row " + std::to_string(t + 1) +
                             ", column '" + labels[static_cast<std::size_t>(i)] + "'");
  }
};

/// T x N matrix of +/-1 orientations. Copies and windows share one immutable
/// row-major buffer; a window is a contiguous row range of its parent.
class SpinMatrix {
public:
  SpinMatrix() = default;

  SpinMatrix(std::vector<std::string> labels, std::vector<std::int8_t> rowMajor,
             std::vector<std::string> dates = {}) {
    auto s = std::make_shared<Storage>();
    s->cols = labels.size();
    if (s->cols == 0) throw InputError("spin matrix needs at least one asset");
    if (rowMajor.size() % s->cols != 0) throw InputError("spin buffer is not a whole number of rows");
    const std::size_t rows = rowMajor.size() / s->cols;
    if (rows == 0) throw InputError("spin matrix needs at least one row");
    if (!dates.empty() && dates.size() != rows) throw InputError("date count does not match rows");
    for (std::size_t k = 0; k < rowMajor.size(); ++k)
      if (rowMajor[k] != 1 && rowMajor[k] != -1)
        throw InputError("spin entry at row " + std::to_string(k / s->cols + 1) + " is not +/-1");
    s->labels = std::move(labels);
    s->spins = std::move(rowMajor);
    s->dates = std::move(dates);
    storage_ = std::move(s);
    begin_ = 0;
    rows_ = rows;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return storage_ ? storage_->cols : 0; }
  bool empty() const { return rows_ == 0; }

  int operator()(std::size_t t, std::size_t i) const {
    return storage_->spins[(begin_ + t) * storage_->cols + i];
  }

  std::span<const std::int8_t> row(std::size_t t) const {
    return {storage_->spins.data() + (begin_ + t) * storage_->cols, storage_->cols};
  }

  const std::vector<std::string>& labels() const { return storage_->labels; }
  bool hasDates() const { return storage_ && !storage_->dates.empty(); }
  const std::string& date(std::size_t t) const { return storage_->dates[begin_ + t]; }

  /// Offset of row 0 within the original (unwindowed) series.
  std::size_t offset() const { return begin_; }

  /// Rows [start, start + width) as a view on the same buffer.
  SpinMatrix window(std::size_t start, std::size_t width) const {
    if (start + width > rows_) throw InputError("window exceeds series length");
    SpinMatrix w = *this;
    w.begin_ = begin_ + start;
    w.rows_ = width;
    return w;
  }

  /// N-bit pattern of row t; bit b set means spin b is +1.
  std::uint32_t pattern(std::size_t t) const {
    std::uint32_t p = 0;
    const auto r = row(t);
    for (std::size_t b = 0; b < r.size(); ++b)
      if (r[b] > 0) p |= (1u << b);
    return p;
  }

  SpinMatrix negated() const {
    std::vector<std::int8_t> out;
    out.reserve(rows_ * cols());
    for (std::size_t t = 0; t < rows_; ++t)
      for (auto v : row(t)) out.push_back(static_cast<std::int8_t>(-v));
    std::vector<std::string> d;
    if (hasDates())
      for (std::size_t t = 0; t < rows_; ++t) d.push_back(date(t));
    return SpinMatrix(labels(), std::move(out), std::move(d));
  }

private:
  struct Storage {
    std::vector<std::string> labels;
    std::vector<std::string> dates;
    std::vector<std::int8_t> spins;
    std::size_t cols = 0;
  };
  std::shared_ptr<const Storage> storage_;
  std::size_t begin_ = 0;
  std::size_t rows_ = 0;
};

struct MomentSet {
  Vector q;  // <s_i>
  Matrix Q;  // <s_i s_j>, unit diagonal
  std::size_t sampleCount = 0;

  std::size_t size() const { return static_cast<std::size_t>(q.size()); }

  /// C_ij = Q_ij - q_i q_j.
  Matrix covariance() const { return Q - q * q.transpose(); }

  /// Largest |difference| over q and the upper triangle of Q.
  double maxAbsDifference(const MomentSet& other) const {
    double worst = (q - other.q).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < Q.rows(); ++i)
      for (Eigen::Index j = i + 1; j < Q.cols(); ++j)
        worst = std::max(worst, std::abs(Q(i, j) - other.Q(i, j)));
    return worst;
  }

  /// Some |q_i| = 1 or off-diagonal |Q_ij| = 1.
  bool saturated() const {
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      if (std::abs(q(i)) >= 1.0) return true;
      for (Eigen::Index j = i + 1; j < q.size(); ++j)
        if (std::abs(Q(i, j)) >= 1.0) return true;
    }
    return false;
  }
};

/// Observed configuration frequencies keyed by N-bit pattern.
struct EmpiricalDistribution {
  int n = 0;
  std::map<std::uint32_t, double> entries;
  std::size_t sampleCount = 0;

  int spinCount() const { return n; }

  double probability(std::uint32_t pattern) const {
    auto it = entries.find(pattern);
    return it == entries.end() ? 0.0 : it->second;
  }

  template <class Fn>
  void forEachSupport(Fn&& fn) const {
    for (const auto& [pattern, p] : entries) fn(pattern, p);
  }

  /// Moments from probability-weighted sums over the table.
  MomentSet moments() const {
    MomentSet m;
    m.q = Vector::Zero(n);
    m.Q = Matrix::Zero(n, n);
    m.sampleCount = sampleCount;
    std::vector<double> s(static_cast<std::size_t>(n));
    for (const auto& [pattern, p] : entries) {
      for (int b = 0; b < n; ++b) s[b] = (pattern >> b) & 1u ? 1.0 : -1.0;
      for (int i = 0; i < n; ++i) {
        m.q(i) += p * s[i];
        for (int j = i + 1; j < n; ++j) m.Q(i, j) += p * s[i] * s[j];
      }
    }
    for (int i = 0; i < n; ++i) {
      m.Q(i, i) = 1.0;
      for (int j = i + 1; j < n; ++j) m.Q(j, i) = m.Q(i, j);
    }
    return m;
  }
};

struct WindowSpec {
  std::size_t width = 1;
  std::size_t shift = 1;

  void validate(std::size_t seriesLength) const {
    if (width < 1 || shift < 1) throw InputError("window width and shift must be >= 1");
    if (width > seriesLength)
      throw InputError("window width " + std::to_string(width) + " exceeds series length " +
                       std::to_string(seriesLength));
  }

  std::size_t count(std::size_t seriesLength) const {
    validate(seriesLength);
    return (seriesLength - width) / shift + 1;
  }
};

/// +1 when close > open, else -1 (ties are bearish).
inline SpinMatrix binarize(const PriceSeries& prices) {
  prices.validate();
  const std::size_t T = prices.days(), N = prices.assets();
  std::vector<std::int8_t> spins(T * N);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < N; ++i)
      spins[t * N + i] = prices.close(t, i) > prices.open(t, i) ? 1 : -1;
  return SpinMatrix(prices.labels, std::move(spins), prices.dates);
}

inline MomentSet empiricalMoments(const SpinMatrix& spins) {
  const std::size_t T = spins.rows(), N = spins.cols();
  if (T == 0) throw InputError("empty spin matrix");
  // Integer accumulation keeps the result exact up to the final division.
  std::vector<long long> first(N, 0), second(N * N, 0);
  for (std::size_t t = 0; t < T; ++t) {
    const auto r = spins.row(t);
    for (std::size_t i = 0; i < N; ++i) {
      first[i] += r[i];
      for (std::size_t j = i + 1; j < N; ++j) second[i * N + j] += r[i] * r[j];
    }
  }
  MomentSet m;
  m.q.resize(N);
  m.Q = Matrix::Identity(N, N);
  m.sampleCount = T;
  const double inv = 1.0 / static_cast<double>(T);
  for (std::size_t i = 0; i < N; ++i) {
    m.q(i) = first[i] * inv;
    for (std::size_t j = i + 1; j < N; ++j) m.Q(i, j) = m.Q(j, i) = second[i * N + j] * inv;
  }
  return m;
}

/// Moments with a pseudocount added to every one of the 2^N configuration
/// counts. The uniform pseudo-mass has zero mean and zero pair moments, so this
/// shrinks q and the off-diagonal of Q by T / (T + pseudocount * 2^N).
inline MomentSet pseudocountMoments(const MomentSet& raw, double pseudocount) {
  const double T = static_cast<double>(raw.sampleCount);
  const double extra = pseudocount * std::ldexp(1.0, static_cast<int>(raw.size()));
  const double shrink = T / (T + extra);
  MomentSet m = raw;
  m.q *= shrink;
  m.Q *= shrink;
  m.Q.diagonal().setOnes();
  return m;
}

/// Empirical moments, smoothed with pseudocount 1 only when saturated.
inline MomentSet fittingMoments(const SpinMatrix& spins, double pseudocount = 1.0) {
  MomentSet m = empiricalMoments(spins);
  return m.saturated() ? pseudocountMoments(m, pseudocount) : m;
}

inline EmpiricalDistribution empiricalDistribution(const SpinMatrix& spins) {
  const int N = static_cast<int>(spins.cols());
  if (N > kMaxDistributionSpins)
    throw CapacityError("empirical distribution limited to N <= " +
                        std::to_string(kMaxDistributionSpins) + " (got " + std::to_string(N) + ")");
  std::map<std::uint32_t, std::size_t> counts;
  for (std::size_t t = 0; t < spins.rows(); ++t) ++counts[spins.pattern(t)];
  EmpiricalDistribution d;
  d.n = N;
  d.sampleCount = spins.rows();
  const double inv = 1.0 / static_cast<double>(spins.rows());
  for (const auto& [p, c] : counts) d.entries.emplace(p, static_cast<double>(c) * inv);
  return d;
}

inline std::vector<SpinMatrix> slidingWindows(const SpinMatrix& spins, const WindowSpec& spec) {
  const std::size_t n = spec.count(spins.rows());
  std::vector<SpinMatrix> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(spins.window(k * spec.shift, spec.width));
  return out;
}

}  // namespace maxent
