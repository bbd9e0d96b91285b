#include <maxent_market/approx_inverse.hpp>
#include <maxent_market/exact_engine.hpp>
#include <maxent_market/sampler.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace maxent;

namespace {

MomentSet exactMoments(const CouplingModel& m) { return modelMoments(enumerate(m)); }

InversionOptions with(InversionMethod method) {
  InversionOptions o;
  o.method = method;
  return o;
}

SpinMatrix sampled(const CouplingModel& m, std::size_t count, std::uint64_t seed) {
  ChainConfig cc;
  cc.seed = seed;
  cc.equilibrationSweeps = 500;
  return sampleConfigurations(m, cc, count);
}

void expectSymmetricFinite(const CouplingModel& m) {
  EXPECT_TRUE(m.J.allFinite());
  EXPECT_TRUE(m.h.allFinite());
  EXPECT_LE((m.J - m.J.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace

TEST(Nmf, IndependentMomentsGiveZeroCouplings) {
  MomentSet m{Vector(3), Matrix::Identity(3, 3), 100};
  m.q << 0.2, -0.5, 0.1;
  m.Q = m.q * m.q.transpose();
  m.Q.diagonal().setOnes();
  const auto r = invertNMF(m);
  EXPECT_LT(r.model.J.cwiseAbs().maxCoeff(), 1e-8);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.model.h(i), std::atanh(m.q(i)), 1e-8);
}

TEST(Nmf, TwoSpinClosedForm) {
  const double c = std::tanh(0.05);
  MomentSet m{Vector::Zero(2), Matrix::Identity(2, 2), 0};
  m.Q(0, 1) = m.Q(1, 0) = c;
  InversionOptions o = with(InversionMethod::nmf);
  o.ridge = 0.0;
  const auto r = invertNMF(m, o);
  EXPECT_NEAR(r.model.J(0, 1), c / (1 - c * c), 1e-14);
  EXPECT_NEAR(r.model.J(0, 1), 0.050083, 1e-6);
  EXPECT_EQ(r.model.J(0, 0), 0.0);
}

TEST(Nmf, WeakCouplingRecoveryWithinTenPercentOfScale) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto truth = makeSyntheticModel(5, 0.05, 0.1, seed);
    const auto r = invertNMF(exactMoments(truth));
    EXPECT_LE((r.model.J - truth.J).cwiseAbs().maxCoeff(), 0.1 * 0.05) << seed;
  }
}

TEST(Nmf, OnFitIndependentMoments) {
  MomentSet m{Vector(4), Matrix::Identity(4, 4), 0};
  m.q << 0.3, -0.1, 0.6, 0.0;
  const auto indep = fitIndependent(m);
  EXPECT_LE(invertNMF(exactMoments(indep)).model.J.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Nmf, SingularCovarianceReportsSmallestEigenvalue) {
  // Two perfectly comoving spins.
  MomentSet m{Vector::Zero(2), Matrix::Ones(2, 2), 10};
  InversionOptions o = with(InversionMethod::nmf);
  o.ridge = 0.0;
  try {
    invertNMF(m, o);
    FAIL();
  } catch (const ConditioningError& e) {
    EXPECT_LE(std::abs(e.smallest_eigenvalue), 1e-12);
  }
  // The default ridge keeps the fit finite.
  EXPECT_NO_THROW(invertNMF(m));
}

TEST(Tap, ZeroMagnetizationEqualsNmf) {
  const auto truth = makeSyntheticModel(5, 0.2, 0.0, 3);
  const auto m = exactMoments(truth);
  const auto nmf = invertNMF(m), tap = invertTAP(m);
  EXPECT_LT((nmf.model.J - tap.model.J).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Tap, WeakCouplingBeatsNmf) {
  // TAP's correction is proportional to q_i q_j, so the comparison is made
  // with non-negligible fields.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto truth = makeSyntheticModel(5, 0.05, 0.5, seed);
    const auto m = exactMoments(truth);
    const double nmf = oracle::couplingError(invertNMF(m).model.J, truth.J);
    const double tap = oracle::couplingError(invertTAP(m).model.J, truth.J);
    EXPECT_LE(tap, nmf) << seed;
  }
}

TEST(Tap, IndependentLimit) {
  MomentSet m{Vector(3), Matrix::Identity(3, 3), 0};
  m.q << 0.4, -0.2, 0.7;
  m.Q = m.q * m.q.transpose();
  m.Q.diagonal().setOnes();
  const auto r = invertTAP(m);
  EXPECT_LT(r.model.J.cwiseAbs().maxCoeff(), 1e-8);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.model.h(i), std::atanh(m.q(i)), 1e-7);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Tap, NegativeDiscriminantFallsBackWithWarning) {
  // Strong anticorrelation with large aligned magnetizations.
  MomentSet m{Vector(2), Matrix::Identity(2, 2), 0};
  m.q << 0.8, 0.8;
  m.Q(0, 1) = m.Q(1, 0) = 0.8 * 0.8 - 0.3;
  const auto r = invertTAP(m);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NEAR(r.model.J(0, 1), invertNMF(m).model.J(0, 1), 1e-12);
}

TEST(Tanaka, IndependentDataHasZeroOffDiagonal) {
  MomentSet m{Vector(3), Matrix::Identity(3, 3), 0};
  m.q << 0.1, 0.5, -0.3;
  m.Q = m.q * m.q.transpose();
  m.Q.diagonal().setOnes();
  const auto r = invertTanaka(m);
  EXPECT_LT(offDiagonal(r.model.J).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_TRUE(r.model.diagonalMeaningful);
  EXPECT_LT(r.model.J.diagonal().cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Tanaka, WeakCouplingBeatsTap) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto truth = makeSyntheticModel(5, 0.05, 0.5, seed);
    const auto m = exactMoments(truth);
    const double tap = oracle::couplingError(invertTAP(m).model.J, truth.J);
    const double tanaka = oracle::couplingError(invertTanaka(m).model.J, truth.J);
    EXPECT_LE(tanaka, tap) << seed;
  }
}

TEST(Tanaka, DiagonalIsNonpositiveAndTracksOrder) {
  // Ordered regime: strong uniform coupling and field, q near +0.9.
  auto ordered = CouplingModel::zeros(6);
  ordered.J.setConstant(0.25);
  ordered.J.diagonal().setZero();
  ordered.h.setConstant(0.6);
  const auto orderedData = sampled(ordered, 20000, 5);
  const auto disorderedData = sampled(CouplingModel::zeros(6), 20000, 6);
  const auto qo = fittingMoments(orderedData);
  EXPECT_GT(qo.q.minCoeff(), 0.8);
  const auto to = invertTanaka(qo).model.J;
  const auto td = invertTanaka(fittingMoments(disorderedData)).model.J;
  EXPECT_LT(to.trace(), td.trace());
  for (int i = 0; i < 6; ++i) EXPECT_LE(to(i, i), 1e-6);
}

TEST(Tanaka, ThirdOrderResidualMatchesStructure) {
  // Self-consistency of the reported off-diagonal solution.
  const auto truth = makeSyntheticModel(6, 0.1, 0.4, 17);
  const auto m = exactMoments(truth);
  const auto r = invertTanaka(m);
  ASSERT_TRUE(r.warnings.empty());
  Matrix C = m.covariance();
  C.diagonal().array() += 1e-8 * C.trace() / 6.0;
  const Matrix inv = C.inverse();
  const auto& J = r.model.J;
  const Vector w = (1.0 - m.q.array().square()).matrix();
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) {
      double T = 0.0;
      for (int k = 0; k < 6; ++k)
        if (k != i && k != j) T += J(i, k) * J(k, j) * w(k);
      const double a = m.q(i) * m.q(j);
      const double b = (1 - 3 * m.q(i) * m.q(i)) * (1 - 3 * m.q(j) * m.q(j));
      const double x = J(i, j);
      EXPECT_NEAR(inv(i, j) + x + 2 * a * x * x + (2.0 / 3.0) * b * x * x * x + 4 * a * x * T, 0.0, 1e-9);
    }
}

TEST(MeanField, HierarchyAcrossCouplingScales) {
  const auto base = makeSyntheticModel(8, 1.0, 0.3, 77);
  for (auto method : {InversionMethod::nmf, InversionMethod::tap, InversionMethod::tanaka}) {
    double previous = std::numeric_limits<double>::infinity();
    for (double beta : {0.1, 0.05, 0.02}) {
      CouplingModel truth = base;
      truth.J *= beta;
      const double err = oracle::couplingError(invertMoments(exactMoments(truth), with(method)).model.J, truth.J);
      EXPECT_LE(err, previous) << methodName(method) << " beta=" << beta;
      previous = err;
    }
  }
}

TEST(Rplm, BalancedPatternsGiveOrigin) {
  const std::vector<std::int8_t> buf{1, 1, 1, -1, -1, 1, -1, -1};
  const auto r = invertRPLM(SpinMatrix(CouplingModel::defaultLabels(2), buf));
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.model.J.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(r.model.h.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Rplm, IdenticalObservationsStayFinite) {
  std::vector<std::int8_t> buf;
  for (int t = 0; t < 50; ++t) buf.insert(buf.end(), {1, -1, 1});
  InversionOptions o;
  o.rplmLambda = 1e-2;
  const auto r = invertRPLM(SpinMatrix(CouplingModel::defaultLabels(3), buf), o);
  expectSymmetricFinite(r.model);
  EXPECT_TRUE(r.converged);
  EXPECT_GT(r.model.h(0), 0.0);
  EXPECT_LT(r.model.h(1), 0.0);
}

TEST(Rplm, LargeSampleCorrelation) {
  const auto truth = makeSyntheticModel(10, 0.2, 0.1, 2024);
  const auto data = sampled(truth, 100000, 31);
  InversionOptions o;
  o.threads = 2;
  const auto r = invertRPLM(data, o);
  EXPECT_TRUE(r.converged);
  expectSymmetricFinite(r.model);
  EXPECT_EQ(r.model.J.diagonal().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GE(oracle::pearson(oracle::upperTriangle(truth.J), oracle::upperTriangle(r.model.J)), 0.95);
}

TEST(Rplm, ThreadCountDoesNotChangeResult) {
  const auto truth = makeSyntheticModel(6, 0.3, 0.1, 8);
  const auto data = sampled(truth, 3000, 2);
  InversionOptions one, four;
  four.threads = 4;
  EXPECT_EQ(invertRPLM(data, one).model.J, invertRPLM(data, four).model.J);
}

TEST(Rplm, ErrorShrinksWithSampleSize) {
  const auto truth = makeSyntheticModel(10, 0.2, 0.1, 99);
  std::vector<double> mean;
  for (std::size_t T : {1000, 10000, 100000}) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
      total += oracle::couplingError(invertRPLM(sampled(truth, T, seed * 1000 + T)).model.J, truth.J);
    mean.push_back(total / 10.0);
  }
  EXPECT_GT(mean[0], mean[1]);
  EXPECT_GT(mean[1], mean[2]);
}

TEST(Rplm, RejectsSingleObservation) {
  EXPECT_THROW(invertRPLM(SpinMatrix({"a", "b"}, {1, -1})), InsufficientDataError);
}

TEST(AllMethods, SymmetricAndFiniteOnSampledData) {
  const auto truth = makeSyntheticModel(7, 0.3, 0.3, 12);
  const auto data = sampled(truth, 5000, 4);
  for (auto method : {InversionMethod::nmf, InversionMethod::tap, InversionMethod::tanaka, InversionMethod::rplm}) {
    const auto r = invertSpins(data, with(method));
    expectSymmetricFinite(r.model);
    EXPECT_EQ(r.model.diagonalMeaningful, method == InversionMethod::tanaka);
    EXPECT_NO_THROW(r.model.validate());
  }
}

TEST(Options, Validation) {
  InversionOptions o;
  o.ridge = -1.0;
  EXPECT_THROW(o.validate(), InputError);
  o = {};
  o.rplmTolerance = 0.0;
  EXPECT_THROW(o.validate(), InputError);
  EXPECT_EQ(parseMethod("tanaka"), InversionMethod::tanaka);
  EXPECT_THROW(parseMethod("exact"), InputError);
  EXPECT_THROW(invertMoments(MomentSet{Vector::Zero(2), Matrix::Identity(2, 2), 1}, {}), InputError);
}
