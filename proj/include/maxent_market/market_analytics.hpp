#pragma once

// Sliding-window order/disorder indicators.

#include "approx_inverse.hpp"
#include "core.hpp"
#include "spin_data.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace maxent {

enum class SeriesKind { netOrientation, mfEntropy, aggregatePreference, traceDeviation, mstLengthDeviation };

inline const char* kindName(SeriesKind k) {
  switch (k) {
    case SeriesKind::netOrientation: return "netOrientation";
    case SeriesKind::mfEntropy: return "mfEntropy";
    case SeriesKind::aggregatePreference: return "aggregatePreference";
    case SeriesKind::traceDeviation: return "traceDeviation";
    case SeriesKind::mstLengthDeviation: return "mstLengthDeviation";
  }
  return "?";
}

inline SeriesKind parseKind(const std::string& s) {
  for (auto k : {SeriesKind::netOrientation, SeriesKind::mfEntropy, SeriesKind::aggregatePreference,
                 SeriesKind::traceDeviation, SeriesKind::mstLengthDeviation})
    if (s == kindName(k)) return k;
  throw InputError("unknown series kind '" + s + "'");
}

/// One value per window; std::nullopt marks a window whose fit failed.
struct TimeSeriesReport {
  SeriesKind kind = SeriesKind::netOrientation;
  WindowSpec spec;
  std::vector<std::size_t> windowStarts;   // row index in the full series
  std::vector<std::string> startLabels;    // date of the first row, if dated
  std::vector<std::optional<double>> values;
  std::map<std::size_t, std::string> gapReasons;
  std::size_t smoothingHalfWidth = 0;
  bool normalized = false;
  bool zeroVariance = false;

  std::size_t size() const { return values.size(); }

  /// Values of the non-gap windows.
  std::vector<double> present() const {
    std::vector<double> out;
    for (const auto& v : values)
      if (v) out.push_back(*v);
    return out;
  }
};

namespace detail {

inline TimeSeriesReport reportSkeleton(const SpinMatrix& spins, const WindowSpec& spec, SeriesKind kind) {
  TimeSeriesReport r;
  r.kind = kind;
  r.spec = spec;
  const std::size_t n = spec.count(spins.rows());
  r.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    r.windowStarts.push_back(k * spec.shift);
    r.startLabels.push_back(spins.hasDates() ? spins.date(k * spec.shift) : std::to_string(k * spec.shift));
  }
  return r;
}

/// Fills r.values[k] = fn(window k); library errors become recorded gaps.
template <class Fn>
void fillWindows(const SpinMatrix& spins, TimeSeriesReport& r, unsigned threads, Fn&& fn) {
  std::vector<std::string> reasons(r.values.size());
  parallelFor(r.values.size(), threads, [&](std::size_t k) {
    try {
      r.values[k] = fn(spins.window(r.windowStarts[k], r.spec.width));
      if (!std::isfinite(*r.values[k])) {
        r.values[k].reset();
        reasons[k] = "non-finite value";
      }
    } catch (const Error& e) {
      r.values[k].reset();
      reasons[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < reasons.size(); ++k)
    if (!r.values[k]) r.gapReasons[k] = reasons[k];
}

inline void subtractMean(TimeSeriesReport& r) {
  const auto vals = r.present();
  if (vals.empty()) return;
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= double(vals.size());
  for (auto& v : r.values)
    if (v) *v -= mean;
}

inline double binaryEntropy(double q) {
  double s = 0.0;
  for (double p : {(1.0 + q) / 2.0, (1.0 - q) / 2.0})
    if (p > 0.0) s -= p * std::log(p);
  return s;
}

}  // namespace detail

/// Mean of all N * width spins per window.
inline TimeSeriesReport netOrientationSeries(const SpinMatrix& spins, const WindowSpec& spec,
                                             unsigned threads = 1) {
  auto r = detail::reportSkeleton(spins, spec, SeriesKind::netOrientation);
  detail::fillWindows(spins, r, threads, [](const SpinMatrix& w) {
    long long sum = 0;
    for (std::size_t t = 0; t < w.rows(); ++t)
      for (auto s : w.row(t)) sum += s;
    return double(sum) / double(w.rows() * w.cols());
  });
  return r;
}

/// Mean-field entropy sum_i H((1 + q_i) / 2) per window, in nats.
inline double meanFieldEntropy(const Vector& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) s += detail::binaryEntropy(q(i));
  return s;
}

inline TimeSeriesReport mfEntropySeries(const SpinMatrix& spins, const WindowSpec& spec,
                                        unsigned threads = 1) {
  auto r = detail::reportSkeleton(spins, spec, SeriesKind::mfEntropy);
  detail::fillWindows(spins, r, threads,
                      [](const SpinMatrix& w) { return meanFieldEntropy(empiricalMoments(w).q); });
  return r;
}

/// Sum of fitted fields per window.
inline TimeSeriesReport aggregatePreferenceSeries(const SpinMatrix& spins, const WindowSpec& spec,
                                                  const InversionOptions& options) {
  auto r = detail::reportSkeleton(spins, spec, SeriesKind::aggregatePreference);
  InversionOptions inner = options;
  inner.threads = 1;
  detail::fillWindows(spins, r, options.threads,
                      [&](const SpinMatrix& w) { return invertSpins(w, inner).model.h.sum(); });
  return r;
}

/// Trace of the third-order (diagonal-trick) coupling matrix per window, minus
/// its mean over the non-gap windows.
inline TimeSeriesReport traceDeviationSeries(const SpinMatrix& spins, const WindowSpec& spec,
                                             const InversionOptions& options = {}) {
  auto r = detail::reportSkeleton(spins, spec, SeriesKind::traceDeviation);
  InversionOptions inner = options;
  inner.method = InversionMethod::tanaka;
  inner.threads = 1;
  detail::fillWindows(spins, r, options.threads, [&](const SpinMatrix& w) {
    return invertTanaka(fittingMoments(w), inner).model.J.trace();
  });
  detail::subtractMean(r);
  return r;
}

/// Centered moving average over 2 * halfWidth + 1 windows, truncated at the
/// ends; gaps are skipped in the average and stay gaps.
inline TimeSeriesReport smoothSeries(const TimeSeriesReport& report, std::size_t halfWidth) {
  TimeSeriesReport out = report;
  out.smoothingHalfWidth = halfWidth;
  const std::size_t n = report.values.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (!report.values[k]) continue;
    const std::size_t lo = k >= halfWidth ? k - halfWidth : 0;
    const std::size_t hi = std::min(n - 1, k + halfWidth);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t m = lo; m <= hi; ++m)
      if (report.values[m]) {
        sum += *report.values[m];
        ++count;
      }
    out.values[k] = sum / double(count);
  }
  return out;
}

/// (x - mean) / sd with the population standard deviation. A constant series
/// maps to zeros and sets zeroVariance.
inline TimeSeriesReport normalizeSeries(const TimeSeriesReport& report) {
  const auto vals = report.present();
  if (vals.empty()) throw InputError("cannot normalize an empty series");
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= double(vals.size());
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= double(vals.size());
  const double sd = std::sqrt(var);
  TimeSeriesReport out = report;
  out.normalized = true;
  out.zeroVariance = !(sd > 1e-14 * std::max(1.0, std::abs(mean)));
  for (auto& v : out.values)
    if (v) *v = out.zeroVariance ? 0.0 : (*v - mean) / sd;
  return out;
}

struct OrientationHistogram {
  std::size_t windowStart = 0;
  std::vector<double> binEdges;
  std::vector<std::size_t> counts;
  std::size_t modeCount = 0;
  std::vector<double> modeCenters;
};

/// Bins over [-1, 1]. When the per-day orientation lattice (spacing 2/N) is
/// coarser than binWidth, each attainable value -1 + 2k/N gets its own bin
/// (end bins clipped to [-1, 1]) so empty bins never split a unimodal shape.
/// Counts are smoothed by a 3-bin average (truncated at the ends) and a mode is
/// a bin strictly above each existing neighbour holding more than 5% of the
/// total mass.
inline OrientationHistogram histogramOf(const std::vector<double>& values, std::size_t assets,
                                        double binWidth) {
  if (!(binWidth > 0.0) || binWidth > 2.0) throw InputError("bin width must be in (0, 2]");
  OrientationHistogram h;
  const double lattice = 2.0 / double(assets);
  const bool onLattice = lattice > binWidth;
  std::size_t bins;
  if (onLattice) {
    bins = assets + 1;
    h.binEdges.push_back(-1.0);
    for (std::size_t k = 0; k < assets; ++k) h.binEdges.push_back(-1.0 + (2.0 * double(k) + 1.0) / double(assets));
    h.binEdges.push_back(1.0);
  } else {
    const double raw = 2.0 / binWidth;
    bins = static_cast<std::size_t>(std::llround(raw));
    if (std::abs(raw - double(bins)) > 1e-9) throw InputError("bin width must divide 2 evenly");
    for (std::size_t k = 0; k <= bins; ++k) h.binEdges.push_back(-1.0 + 2.0 * double(k) / double(bins));
  }
  h.counts.assign(bins, 0);
  for (double v : values) {
    std::size_t b;
    if (onLattice)
      b = static_cast<std::size_t>(std::llround((v + 1.0) * double(assets) / 2.0));
    else
      b = static_cast<std::size_t>(std::floor((v + 1.0) / 2.0 * double(bins) + 1e-9));
    ++h.counts[std::min(b, bins - 1)];
  }
  std::vector<double> smooth(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const std::size_t lo = k ? k - 1 : 0, hi = std::min(bins - 1, k + 1);
    double s = 0.0;
    for (std::size_t m = lo; m <= hi; ++m) s += double(h.counts[m]);
    smooth[k] = s / double(hi - lo + 1);
  }
  const double threshold = 0.05 * double(values.size());
  for (std::size_t k = 0; k < bins; ++k) {
    const bool aboveLeft = k == 0 || smooth[k] > smooth[k - 1];
    const bool aboveRight = k + 1 == bins || smooth[k] > smooth[k + 1];
    if (aboveLeft && aboveRight && smooth[k] > threshold) {
      ++h.modeCount;
      h.modeCenters.push_back(onLattice ? -1.0 + 2.0 * double(k) / double(assets)
                                        : 0.5 * (h.binEdges[k] + h.binEdges[k + 1]));
    }
  }
  return h;
}

/// One histogram per non-overlapping window, pooling that window's per-day
/// net orientations (mean over assets).
inline std::vector<OrientationHistogram> orientationHistogram(const SpinMatrix& spins,
                                                              const WindowSpec& spec,
                                                              double binWidth = 0.1) {
  if (spec.shift != spec.width)
    throw InputError("orientation histograms need non-overlapping windows (shift == width)");
  std::vector<OrientationHistogram> out;
  for (const auto& w : slidingWindows(spins, spec)) {
    std::vector<double> daily;
    daily.reserve(w.rows());
    for (std::size_t t = 0; t < w.rows(); ++t) {
      long long s = 0;
      for (auto v : w.row(t)) s += v;
      daily.push_back(double(s) / double(w.cols()));
    }
    auto h = histogramOf(daily, w.cols(), binWidth);
    h.windowStart = w.offset() - spins.offset();
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace maxent
