#include <maxent_market/spin_data.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace maxent;

namespace {

SpinMatrix rows(std::vector<std::vector<int>> r) {
  std::vector<std::int8_t> buf;
  for (auto& row : r)
    for (int v : row) buf.push_back(static_cast<std::int8_t>(v));
  return SpinMatrix(CouplingModel::defaultLabels(r.front().size()), buf);
}

PriceSeries oneAsset(double open, double close) {
  PriceSeries p;
  p.labels = {"AEX"};
  p.dates = {"2002-06-06"};
  p.open = Matrix::Constant(1, 1, open);
  p.close = Matrix::Constant(1, 1, close);
  return p;
}

}  // namespace

TEST(Binarize, UpDownAndTie) {
  EXPECT_EQ(binarize(oneAsset(100, 101))(0, 0), 1);
  EXPECT_EQ(binarize(oneAsset(100, 100))(0, 0), -1);
  EXPECT_EQ(binarize(oneAsset(100, 99))(0, 0), -1);
}

TEST(Binarize, RejectsNonpositivePriceNamingLocation) {
  auto p = oneAsset(100, 101);
  p.open(0, 0) = 0.0;
  try {
    binarize(p);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("AEX"), std::string::npos);
  }
  p.open(0, 0) = std::nan("");
  EXPECT_THROW(binarize(p), InputError);
}

TEST(Binarize, OnlyPlusMinusOneOnRandomPrices) {
  Rng rng(4);
  PriceSeries p;
  p.labels = {"a", "b", "c"};
  p.open.resize(200, 3);
  p.close.resize(200, 3);
  for (int t = 0; t < 200; ++t)
    for (int i = 0; i < 3; ++i) {
      p.open(t, i) = rng.uniform(1, 2);
      p.close(t, i) = t % 7 == 0 ? p.open(t, i) : rng.uniform(1, 2);
    }
  const auto s = binarize(p);
  for (std::size_t t = 0; t < s.rows(); ++t)
    for (std::size_t i = 0; i < s.cols(); ++i) {
      EXPECT_TRUE(s(t, i) == 1 || s(t, i) == -1);
      EXPECT_EQ(s(t, i) == 1, p.close(t, i) > p.open(t, i));
    }
}

TEST(EmpiricalMoments, Examples) {
  auto co = empiricalMoments(rows({{1, 1}, {-1, -1}}));
  EXPECT_EQ(co.q(0), 0.0);
  EXPECT_EQ(co.Q(0, 1), 1.0);
  auto anti = empiricalMoments(rows({{1, -1}, {-1, 1}}));
  EXPECT_EQ(anti.Q(0, 1), -1.0);
  auto ind = empiricalMoments(rows({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}));
  EXPECT_EQ(ind.q(1), 0.0);
  EXPECT_EQ(ind.Q(0, 1), 0.0);
  EXPECT_EQ(ind.Q(0, 0), 1.0);
  EXPECT_EQ(ind.sampleCount, 4u);
}

TEST(EmpiricalMoments, ConcatenationAveragesEqualLengthHalves) {
  Rng rng(11);
  std::vector<std::int8_t> a, b;
  for (int k = 0; k < 4 * 50; ++k) {
    a.push_back(rng.uniform() < 0.3 ? 1 : -1);
    b.push_back(rng.uniform() < 0.6 ? 1 : -1);
  }
  std::vector<std::int8_t> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const auto labels = CouplingModel::defaultLabels(4);
  const auto ma = empiricalMoments(SpinMatrix(labels, a));
  const auto mb = empiricalMoments(SpinMatrix(labels, b));
  const auto mab = empiricalMoments(SpinMatrix(labels, ab));
  EXPECT_LT((mab.q - 0.5 * (ma.q + mb.q)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((mab.Q - 0.5 * (ma.Q + mb.Q)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EmpiricalDistribution, Examples) {
  auto d = empiricalDistribution(rows({{1, 1}, {-1, -1}}));
  ASSERT_EQ(d.entries.size(), 2u);
  EXPECT_EQ(d.probability(0b11), 0.5);
  EXPECT_EQ(d.probability(0b00), 0.5);
  EXPECT_EQ(d.probability(0b01), 0.0);

  auto c = empiricalDistribution(rows({{1, -1}, {1, -1}, {1, -1}}));
  ASSERT_EQ(c.entries.size(), 1u);
  EXPECT_EQ(c.probability(0b01), 1.0);

  auto u = empiricalDistribution(rows({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}));
  for (std::uint32_t p = 0; p < 4; ++p) EXPECT_EQ(u.probability(p), 0.25);
}

TEST(EmpiricalDistribution, CapacityGuard) {
  std::vector<std::int8_t> buf(27, 1);
  EXPECT_THROW(empiricalDistribution(SpinMatrix(CouplingModel::defaultLabels(27), buf)), CapacityError);
}

TEST(EmpiricalDistribution, MomentsAgreeWithDirectMoments) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.below(7), T = 1 + rng.below(300);
    std::vector<std::int8_t> buf;
    for (std::size_t k = 0; k < n * T; ++k) buf.push_back(rng.uniform() < 0.45 ? 1 : -1);
    const SpinMatrix s(CouplingModel::defaultLabels(n), buf);
    const auto d = empiricalDistribution(s);
    double total = 0.0;
    for (auto& [p, w] : d.entries) total += w;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_LE(d.entries.size(), std::min<std::size_t>(std::size_t{1} << n, T));
    EXPECT_LT(d.moments().maxAbsDifference(empiricalMoments(s)), 1e-12);
  }
}

TEST(SlidingWindows, CountsAndStarts) {
  std::vector<std::int8_t> buf(10, 1);
  const SpinMatrix s({"x"}, buf);
  const auto w = slidingWindows(s, {4, 2});
  ASSERT_EQ(w.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(w[k].offset(), 2 * k);
    EXPECT_EQ(w[k].rows(), 4u);
  }
  EXPECT_EQ(slidingWindows(s, {10, 1}).size(), 1u);
  EXPECT_EQ((WindowSpec{300, 1}.count(2253)), 1954u);
  EXPECT_THROW(slidingWindows(s, {11, 1}), InputError);
  EXPECT_THROW(slidingWindows(s, {3, 0}), InputError);
}

TEST(SlidingWindows, TilingWithShiftEqualWidthCoversPrefixOnce) {
  std::vector<std::int8_t> buf;
  for (int t = 0; t < 23; ++t) buf.push_back(t % 3 ? 1 : -1);
  const SpinMatrix s({"x"}, buf);
  const auto w = slidingWindows(s, {5, 5});
  ASSERT_EQ(w.size(), 4u);
  std::vector<int> covered(23, 0);
  for (const auto& win : w)
    for (std::size_t t = 0; t < win.rows(); ++t) {
      ++covered[win.offset() + t];
      EXPECT_EQ(win(t, 0), s(win.offset() + t, 0));  // view, not copy
    }
  for (int t = 0; t < 23; ++t) EXPECT_EQ(covered[t], t < 20 ? 1 : 0);
}

TEST(FittingMoments, SmoothsOnlySaturatedInput) {
  const auto clean = rows({{1, 1}, {1, -1}, {-1, 1}, {-1, 1}});
  EXPECT_LT(fittingMoments(clean).maxAbsDifference(empiricalMoments(clean)), 1e-15);
  const auto sat = rows({{1, 1}, {1, -1}, {1, 1}});
  const auto m = fittingMoments(sat);
  // T = 3 rows plus one pseudo-observation of each of the 4 patterns.
  EXPECT_NEAR(m.q(0), 3.0 / 7.0, 1e-15);
  EXPECT_NEAR(m.Q(0, 1), (1.0 / 3.0) * 3.0 / 7.0, 1e-15);
  EXPECT_FALSE(m.saturated());
}
