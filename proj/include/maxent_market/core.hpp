#pragma once

// Shared vocabulary: error types, linear-algebra aliases, the seeded RNG and a
// small ordered parallel-for used by the windowed pipelines.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace maxent {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr const char* kToolVersion = "1.0.0";

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (bad CSV, nonpositive price, bad window).
class InputError : public Error {
public:
  using Error::Error;
};

/// Problem size exceeds an enumeration or table guard.
class CapacityError : public Error {
public:
  using Error::Error;
};

/// Saturated moments (|q| = 1 and the like) where a finite model is required.
class DegenerateError : public Error {
public:
  using Error::Error;
};

/// Covariance not invertible even after ridge regularization.
class ConditioningError : public Error {
public:
  ConditioningError(const std::string& what, double smallestEigenvalue)
      : Error(what), smallest_eigenvalue(smallestEigenvalue) {}
  double smallest_eigenvalue;
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
};

class DegenerateGraphError : public Error {
public:
  using Error::Error;
};

/// Seeded generator with platform-independent derived draws.
///
/// std::uniform_*_distribution are implementation-defined, so they are avoided:
/// the raw mt19937_64 stream is fixed by the standard and every derived value
/// below is a pure function of it.
class Rng {
public:
  static constexpr const char* kName = "mt19937_64/v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

private:
  std::mt19937_64 engine_;
};

/// Worker count: explicit request, else MAXENT_MARKET_THREADS, else hardware.
inline unsigned resolveThreads(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MAXENT_MARKET_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(k) for k in [0, count) on up to `threads` workers. Callers write
/// results into slot k, so assembly order never depends on scheduling. The
/// first exception thrown by any task is rethrown after all workers join.
template <class Fn>
void parallelFor(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failureMutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < count; k = next++) {
          try {
            fn(k);
          } catch (...) {
            std::lock_guard lock(failureMutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace maxent
