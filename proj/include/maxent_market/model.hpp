#pragma once

#include "core.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace maxent {

/// Pairwise Gibbs model p(s) ~ exp(U(s)),
/// U(s) = sum_{i<j} J_ij s_i s_j + sum_i h_i s_i.
///
/// The diagonal of J never enters U. It is zero unless diagonalMeaningful is
/// set, in which case it carries expansion diagnostics (see invertTanaka).
struct CouplingModel {
  std::vector<std::string> labels;
  Matrix J;
  Vector h;
  bool diagonalMeaningful = false;

  CouplingModel() = default;
  CouplingModel(std::vector<std::string> l, Matrix couplings, Vector fields, bool diag = false)
      : labels(std::move(l)), J(std::move(couplings)), h(std::move(fields)), diagonalMeaningful(diag) {}

  /// Zero couplings and fields with generated labels s0..s{n-1}.
  static CouplingModel zeros(std::size_t n) {
    return {defaultLabels(n), Matrix::Zero(n, n), Vector::Zero(n)};
  }

  static std::vector<std::string> defaultLabels(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("s" + std::to_string(i));
    return out;
  }

  std::size_t size() const { return static_cast<std::size_t>(h.size()); }

  void validate() const {
    const auto n = h.size();
    if (J.rows() != n || J.cols() != n) throw InputError("J must be N x N with N = len(h)");
    if (labels.size() != static_cast<std::size_t>(n)) throw InputError("label count must equal N");
    if (!J.allFinite() || !h.allFinite()) throw InputError("model parameters must be finite");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!diagonalMeaningful && J(i, i) != 0.0)
        throw InputError("J diagonal must be zero unless diagonal_meaningful is set");
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (std::abs(J(i, j) - J(j, i)) > 1e-12) throw InputError("J is not symmetric");
    }
  }

  /// h_i + sum_{j != i} J_ij s_j.
  template <class Spin>
  double localField(std::span<const Spin> s, std::size_t i) const {
    double f = h(i);
    for (std::size_t j = 0; j < s.size(); ++j)
      if (j != i) f += J(i, j) * s[j];
    return f;
  }
};

/// U(s); the negative of the conflict function H(s).
template <class Spin>
double utility(const CouplingModel& model, std::span<const Spin> s) {
  const std::size_t n = model.size();
  if (s.size() != n)
    throw InputError("configuration length " + std::to_string(s.size()) + " != N = " +
                     std::to_string(n));
  double u = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    u += model.h(i) * s[i];
    double row = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) row += model.J(i, j) * s[j];
    u += row * s[i];
  }
  return u;
}

inline double utility(const CouplingModel& model, const std::vector<int>& s) {
  return utility(model, std::span<const int>(s));
}

/// Model with the diagonal of J cleared, used wherever only couplings matter.
inline Matrix offDiagonal(const Matrix& J) {
  Matrix out = J;
  out.diagonal().setZero();
  return out;
}

}  // namespace maxent
