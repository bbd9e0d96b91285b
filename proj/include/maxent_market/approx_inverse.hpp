#pragma once

// Approximate inverse-Ising solvers for N beyond enumeration reach.

#include "core.hpp"
#include "model.hpp"
#include "spin_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace maxent {

enum class InversionMethod { nmf, tap, tanaka, rplm };

inline const char* methodName(InversionMethod m) {
  switch (m) {
    case InversionMethod::nmf: return "nmf";
    case InversionMethod::tap: return "tap";
    case InversionMethod::tanaka: return "tanaka";
    case InversionMethod::rplm: return "rplm";
  }
  return "?";
}

inline InversionMethod parseMethod(const std::string& name) {
  if (name == "nmf") return InversionMethod::nmf;
  if (name == "tap") return InversionMethod::tap;
  if (name == "tanaka") return InversionMethod::tanaka;
  if (name == "rplm") return InversionMethod::rplm;
  throw InputError("unknown inversion method '" + name + "'");
}

struct InversionOptions {
  InversionMethod method = InversionMethod::rplm;
  /// Covariance ridge; unset means 1e-8 * trace(C) / N.
  std::optional<double> ridge;
  double rplmLambda = 1e-3;
  double rplmTolerance = 1e-6;
  std::size_t rplmMaxIterations = 20000;
  unsigned threads = 1;

  void validate() const {
    if (ridge && *ridge < 0.0) throw InputError("ridge must be >= 0");
    if (rplmLambda < 0.0) throw InputError("rplm lambda must be >= 0");
    if (!(rplmTolerance > 0.0)) throw InputError("rplm tolerance must be > 0");
  }
};

struct InversionResult {
  CouplingModel model;
  std::vector<std::string> warnings;
  bool converged = true;
  double gradientNorm = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

inline std::vector<std::string> labelsOr(std::vector<std::string> labels, std::size_t n) {
  return labels.empty() ? CouplingModel::defaultLabels(n) : labels;
}

inline void requireUnsaturated(const MomentSet& m) {
  for (Eigen::Index i = 0; i < m.q.size(); ++i)
    if (std::abs(m.q(i)) >= 1.0)
      throw DegenerateError("mean orientation of spin " + std::to_string(i) +
                            " is saturated (|q| = 1)");
}

/// (C + ridge I)^{-1} via the symmetric eigendecomposition.
inline Matrix regularizedInverse(const Matrix& C, std::optional<double> ridge) {
  const auto n = C.rows();
  const double r = ridge ? *ridge : 1e-8 * C.trace() / static_cast<double>(n);
  Matrix A = C;
  A.diagonal().array() += r;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  const Vector& ev = eig.eigenvalues();
  const double smallest = ev.minCoeff();
  const double largest = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (!(smallest > 1e-13 * largest))
    throw ConditioningError("covariance is singular after ridge regularization (smallest eigenvalue " +
                                std::to_string(smallest) + ")",
                            smallest);
  Matrix inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (inv + inv.transpose());
}

inline Vector atanhOf(const Vector& q) { return q.unaryExpr([](double x) { return std::atanh(x); }); }

}  // namespace detail

/// Naive mean field: J = -C^{-1} off the diagonal.
inline InversionResult invertNMF(const MomentSet& moments, const InversionOptions& options = {},
                                 std::vector<std::string> labels = {}) {
  options.validate();
  detail::requireUnsaturated(moments);
  const Matrix inv = detail::regularizedInverse(moments.covariance(), options.ridge);
  Matrix J = -offDiagonal(inv);
  Vector h = detail::atanhOf(moments.q) - J * moments.q;
  InversionResult r;
  r.model = CouplingModel(detail::labelsOr(std::move(labels), moments.size()), std::move(J), std::move(h));
  return r;
}

/// TAP: per-pair root of  c + J + 2 q_i q_j J^2 = 0  continuous with nMF.
inline InversionResult invertTAP(const MomentSet& moments, const InversionOptions& options = {},
                                 std::vector<std::string> labels = {}) {
  options.validate();
  detail::requireUnsaturated(moments);
  const auto n = moments.q.size();
  const Vector& q = moments.q;
  const Matrix inv = detail::regularizedInverse(moments.covariance(), options.ridge);
  InversionResult r;
  Matrix J = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double c = inv(i, j);
      const double disc = 1.0 - 8.0 * c * q(i) * q(j);
      if (disc < 0.0) {
        J(i, j) = -c;
        r.warnings.push_back("tap: negative discriminant for pair (" + std::to_string(i) + "," +
                             std::to_string(j) + "); using nmf value");
      } else {
        J(i, j) = -2.0 * c / (1.0 + std::sqrt(disc));
      }
      J(j, i) = J(i, j);
    }
  const Vector oneMinusQ2 = (1.0 - q.array().square()).matrix();
  Vector h = detail::atanhOf(q) - J * q;
  h.array() += q.array() * (J.array().square().matrix() * oneMinusQ2).array();
  r.model = CouplingModel(detail::labelsOr(std::move(labels), n), std::move(J), std::move(h));
  return r;
}

/// Third-order Plefka inversion with the diagonal trick.
///
/// Off-diagonal couplings solve, per pair,
///   (C^-1)_ij + J + 2 a J^2 + (2/3) b J^3 + 4 a J T_ij = 0,
///   a = q_i q_j,  b = (1 - 3 q_i^2)(1 - 3 q_j^2),
///   T_ij = sum_{k != i,j} J_ik J_kj (1 - q_k^2),
/// iterating T_ij to a fixed point. The diagonal keeps
///   J_ii = 1/(1 - q_i^2) - (C^-1)_ii,
/// which estimates the (negative) second-order and part of the third-order
/// self terms, so trace(J) is a diagnostic rather than zero.
inline InversionResult invertTanaka(const MomentSet& moments, const InversionOptions& options = {},
                                    std::vector<std::string> labels = {}) {
  options.validate();
  detail::requireUnsaturated(moments);
  const auto n = moments.q.size();
  const Vector& q = moments.q;
  const Vector w = (1.0 - q.array().square()).matrix();
  const Matrix inv = detail::regularizedInverse(moments.covariance(), options.ridge);

  InversionResult r;
  // Start from TAP, itself the second-order solution.
  InversionOptions tapOptions = options;
  Matrix J = invertTAP(moments, tapOptions).model.J;
  const Matrix tapJ = J;
  std::vector<bool> fellBack(static_cast<std::size_t>(n * n), false);

  auto solvePair = [&](Eigen::Index i, Eigen::Index j, double T, double guess) -> std::optional<double> {
    const double c = inv(i, j);
    const double a = q(i) * q(j);
    const double b = (1.0 - 3.0 * q(i) * q(i)) * (1.0 - 3.0 * q(j) * q(j));
    double x = guess;
    for (int it = 0; it < 60; ++it) {
      const double g = c + x + 2.0 * a * x * x + (2.0 / 3.0) * b * x * x * x + 4.0 * a * x * T;
      const double dg = 1.0 + 4.0 * a * x + 2.0 * b * x * x + 4.0 * a * T;
      if (!(std::abs(dg) > 1e-12)) return std::nullopt;
      const double dx = g / dg;
      x -= dx;
      if (!std::isfinite(x)) return std::nullopt;
      if (std::abs(dx) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    const double g = c + x + 2.0 * a * x * x + (2.0 / 3.0) * b * x * x * x + 4.0 * a * x * T;
    if (std::abs(g) > 1e-10 * std::max(1.0, std::abs(c))) return std::nullopt;
    // Reject roots on a different branch from the weak-coupling solution.
    const double scale = std::max(std::abs(guess), std::abs(c));
    if (std::abs(x - guess) > 1.0 * scale + 1e-12) return std::nullopt;
    return x;
  };

  for (int sweep = 0; sweep < 200; ++sweep) {
    Matrix next = J;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double T = 0.0;
        for (Eigen::Index k = 0; k < n; ++k)
          if (k != i && k != j) T += J(i, k) * J(k, j) * w(k);
        const auto root = solvePair(i, j, T, J(i, j));
        if (root) {
          next(i, j) = *root;
          fellBack[static_cast<std::size_t>(i * n + j)] = false;
        } else {
          next(i, j) = tapJ(i, j);
          fellBack[static_cast<std::size_t>(i * n + j)] = true;
        }
        next(j, i) = next(i, j);
      }
    const double change = (next - J).cwiseAbs().maxCoeff();
    J = next;
    if (change <= 1e-13) break;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (fellBack[static_cast<std::size_t>(i * n + j)])
        r.warnings.push_back("tanaka: no third-order root for pair (" + std::to_string(i) + "," +
                             std::to_string(j) + "); using tap value");

  Vector h = detail::atanhOf(q) - J * q;
  for (Eigen::Index i = 0; i < n; ++i) {
    double second = 0.0, third = 0.0, triangle = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double Jij = J(i, j);
      second += Jij * Jij * w(j);
      third += Jij * Jij * Jij * q(j) * w(j);
      for (Eigen::Index k = j + 1; k < n; ++k)
        if (k != i) triangle += Jij * J(j, k) * J(k, i) * w(j) * w(k);
    }
    h(i) += q(i) * second - (2.0 / 3.0) * (1.0 - 3.0 * q(i) * q(i)) * third + 2.0 * q(i) * triangle;
  }
  for (Eigen::Index i = 0; i < n; ++i) J(i, i) = 1.0 / w(i) - inv(i, i);

  r.model = CouplingModel(detail::labelsOr(std::move(labels), n), std::move(J), std::move(h), true);
  return r;
}

namespace detail {

/// Distinct rows with multiplicities, in lexicographic row order.
struct WeightedRows {
  std::size_t cols = 0;
  std::vector<std::int8_t> rows;  // row-major, distinct
  std::vector<double> weights;    // count / T
};

inline WeightedRows compressRows(const SpinMatrix& spins) {
  std::map<std::vector<std::int8_t>, std::size_t> counts;
  for (std::size_t t = 0; t < spins.rows(); ++t) {
    const auto r = spins.row(t);
    ++counts[std::vector<std::int8_t>(r.begin(), r.end())];
  }
  WeightedRows out;
  out.cols = spins.cols();
  const double inv = 1.0 / static_cast<double>(spins.rows());
  for (const auto& [row, c] : counts) {
    out.rows.insert(out.rows.end(), row.begin(), row.end());
    out.weights.push_back(static_cast<double>(c) * inv);
  }
  return out;
}

inline double logSigmoid(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct SpinProblemResult {
  Vector theta;  // theta(i) holds h_i, theta(j != i) holds K_ij
  double gradientNorm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Maximizes  sum_t w_t ln sigma(2 s_i (h_i + sum_{j != i} K_ij s_j)) - lambda |theta|^2
/// by damped Newton steps with Armijo backtracking. Falls back to the gradient
/// direction when the Hessian is not usable (lambda = 0 on separable data).
inline SpinProblemResult solveSpinProblem(const WeightedRows& data, std::size_t i, double lambda,
                                          double tolerance, std::size_t maxIterations) {
  const auto n = static_cast<Eigen::Index>(data.cols);
  const auto m = static_cast<Eigen::Index>(data.weights.size());
  Matrix X(m, n);
  Vector y(m), w(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index j = 0; j < n; ++j) X(r, j) = data.rows[static_cast<std::size_t>(r * n + j)];
    y(r) = X(r, static_cast<Eigen::Index>(i));
    X(r, static_cast<Eigen::Index>(i)) = 1.0;
    w(r) = data.weights[static_cast<std::size_t>(r)];
  }
  auto objective = [&](const Vector& th) {
    const Vector z = 2.0 * y.cwiseProduct(X * th);
    double f = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) f += w(r) * logSigmoid(z(r));
    return f - lambda * th.squaredNorm();
  };

  SpinProblemResult res;
  res.theta = Vector::Zero(n);
  double f = objective(res.theta);
  for (std::size_t it = 0;; ++it) {
    const Vector z = 2.0 * y.cwiseProduct(X * res.theta);
    Vector coeff(m), curv(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const double sg = sigmoid(z(r));
      coeff(r) = w(r) * 2.0 * y(r) * (1.0 - sg);
      curv(r) = w(r) * 4.0 * sg * (1.0 - sg);
    }
    const Vector g = X.transpose() * coeff - 2.0 * lambda * res.theta;
    res.iterations = it;
    res.gradientNorm = g.norm();
    if (res.gradientNorm <= tolerance) {
      res.converged = true;
      return res;
    }
    if (it >= maxIterations) return res;

    Matrix H = X.transpose() * curv.asDiagonal() * X;
    H.diagonal().array() += 2.0 * lambda;
    Eigen::LDLT<Matrix> ldlt(H);
    Vector d = g;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      Vector nd = ldlt.solve(g);
      if (nd.allFinite() && nd.dot(g) > 0.0) d = std::move(nd);
    }
    const double slope = d.dot(g);
    double step = 1.0;
    Vector trial;
    double ft = 0.0;
    for (;;) {
      trial = res.theta + step * d;
      ft = objective(trial);
      if (ft >= f + 1e-4 * step * slope || step < 1e-12) break;
      step *= 0.5;
    }
    if (!(ft >= f)) return res;
    res.theta = std::move(trial);
    f = ft;
  }
}

}  // namespace detail

/// Regularized pseudo-likelihood maximization, one logistic problem per spin,
/// couplings symmetrized as (K_ij + K_ji) / 2.
inline InversionResult invertRPLM(const SpinMatrix& spins, const InversionOptions& options = {}) {
  options.validate();
  if (spins.rows() < 2) throw InsufficientDataError("rplm needs at least 2 observations");
  const std::size_t n = spins.cols();
  const auto data = detail::compressRows(spins);
  std::vector<detail::SpinProblemResult> parts(n);
  parallelFor(n, options.threads, [&](std::size_t i) {
    parts[i] = detail::solveSpinProblem(data, i, options.rplmLambda, options.rplmTolerance,
                                        options.rplmMaxIterations);
  });
  Matrix K = Matrix::Zero(n, n);
  Vector h(n);
  InversionResult r;
  for (std::size_t i = 0; i < n; ++i) {
    h(i) = parts[i].theta(i);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) K(i, j) = parts[i].theta(j);
    r.converged = r.converged && parts[i].converged;
    r.gradientNorm = std::max(r.gradientNorm, parts[i].gradientNorm);
    r.iterations = std::max(r.iterations, parts[i].iterations);
    if (!parts[i].converged)
      r.warnings.push_back("rplm: spin " + std::to_string(i) + " stopped at gradient norm " +
                           std::to_string(parts[i].gradientNorm));
  }
  Matrix J = 0.5 * (K + K.transpose());
  r.model = CouplingModel(spins.labels(), std::move(J), std::move(h));
  return r;
}

/// Moment-based dispatch for nmf / tap / tanaka.
inline InversionResult invertMoments(const MomentSet& moments, const InversionOptions& options,
                                     std::vector<std::string> labels = {}) {
  switch (options.method) {
    case InversionMethod::nmf: return invertNMF(moments, options, std::move(labels));
    case InversionMethod::tap: return invertTAP(moments, options, std::move(labels));
    case InversionMethod::tanaka: return invertTanaka(moments, options, std::move(labels));
    case InversionMethod::rplm: break;
  }
  throw InputError("rplm needs spin data, not moments");
}

/// Fits spin data with the selected method; mean-field methods use fitting
/// moments (pseudocount-smoothed only when saturated).
inline InversionResult invertSpins(const SpinMatrix& spins, const InversionOptions& options) {
  if (options.method == InversionMethod::rplm) return invertRPLM(spins, options);
  return invertMoments(fittingMoments(spins), options, spins.labels());
}

}  // namespace maxent
