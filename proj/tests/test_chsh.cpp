#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bellhaar/chsh.hpp"
#include "bellhaar/random.hpp"

using namespace bellhaar;

namespace {

constexpr double kPi = std::numbers::pi;

ChshSettings malus_example()
{
  return {Rotation{}, Rotation::about_z(kPi / 2), Rotation::about_z(kPi / 4), Rotation::about_z(3 * kPi / 4)};
}

std::vector<Rotation> hidden_sample(std::size_t n, std::uint64_t seed)
{
  Rng rng(seed);
  std::vector<Rotation> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(haar_sample(rng));
  }
  return out;
}

}  // namespace

TEST(AlgebraicBound, CornersHitBothEnds)
{
  double lo = 1.0, hi = -2.0;
  for (int mask = 0; mask < 16; ++mask) {
    const double r1 = mask & 1, r2 = (mask >> 1) & 1, s1 = (mask >> 2) & 1, s2 = (mask >> 3) & 1;
    const auto b = check_algebraic_bound(r1, r2, s1, s2);
    EXPECT_TRUE(in_bound(b.verdict));
    lo = std::min(lo, b.value);
    hi = std::max(hi, b.value);
  }
  EXPECT_EQ(lo, -1.0);
  EXPECT_EQ(hi, 0.0);
  EXPECT_EQ(check_algebraic_bound(0, 0, 0, 0).verdict, BoundVerdict::kAtUpper);
  EXPECT_EQ(check_algebraic_bound(0, 1, 0, 0).verdict, BoundVerdict::kAtLower);
}

TEST(AlgebraicBound, HoldsOnRandomPoints)
{
  Rng rng(17);
  for (int i = 0; i < 1000000; ++i) {
    const auto b = check_algebraic_bound(rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform());
    ASSERT_TRUE(in_bound(b.verdict)) << b.value;
    ASSERT_GE(b.value, -1.0 - kAnalyticTolerance);
    ASSERT_LE(b.value, kAnalyticTolerance);
  }
}

TEST(AlgebraicBound, KnownValues)
{
  EXPECT_DOUBLE_EQ(check_algebraic_bound(0.5, 0.5, 0.5, 0.5).value, -0.5);
  EXPECT_DOUBLE_EQ(check_algebraic_bound(1, 1, 1, 1).value, 0.0);
  EXPECT_EQ(check_algebraic_bound(0.5, 0.5, 0.5, 0.5).verdict, BoundVerdict::kInside);
}

TEST(AlgebraicBound, RejectsOutOfRange)
{
  EXPECT_THROW(check_algebraic_bound(-0.1, 0, 0, 0), std::invalid_argument);
  EXPECT_THROW(check_algebraic_bound(0, 1.1, 0, 0), std::invalid_argument);
  EXPECT_THROW(check_algebraic_bound(0, 0, std::nan(""), 0), std::invalid_argument);
}

TEST(ClassifyBound, Verdicts)
{
  EXPECT_EQ(classify_bound(-1.5, 0.1), BoundVerdict::kBelow);
  EXPECT_EQ(classify_bound(-1.05, 0.1), BoundVerdict::kAtLower);
  EXPECT_EQ(classify_bound(-0.5, 0.1), BoundVerdict::kInside);
  EXPECT_EQ(classify_bound(0.05, 0.1), BoundVerdict::kAtUpper);
  EXPECT_EQ(classify_bound(0.2, 0.1), BoundVerdict::kAbove);
  EXPECT_EQ(to_string(BoundVerdict::kAtLower), "at_lower");
}

TEST(ChshCombination, SumsComponentsAndErrors)
{
  const std::map<SettingPair, Estimate> joints{{{"A1", "B1"}, {0.1, 0.01}},
                                               {{"A1", "B2"}, {0.2, 0.02}},
                                               {{"A2", "B1"}, {0.3, 0.02}},
                                               {{"A2", "B2"}, {0.4, 0.04}}};
  const auto rep = chsh_combination(joints, {"A1", "A2", "B1", "B2"}, {0.5, 0.01}, {0.6, 0.02});
  EXPECT_DOUBLE_EQ(rep.s, 0.4 + 0.3 + 0.2 - 0.1 - 0.5 - 0.6);
  EXPECT_DOUBLE_EQ(rep.se_s, std::sqrt(1e-4 + 4e-4 + 4e-4 + 16e-4 + 1e-4 + 4e-4));
  EXPECT_DOUBLE_EQ(rep.recompute(), rep.s);
  EXPECT_DOUBLE_EQ(rep.tolerance(), 4 * rep.se_s);
  EXPECT_EQ(rep.verdict, BoundVerdict::kInside);
}

TEST(ChshCombination, MissingPairNamesIt)
{
  const std::map<SettingPair, Estimate> joints{
      {{"A1", "B1"}, {0.1, 0.0}}, {{"A1", "B2"}, {0.1, 0.0}}, {{"A2", "B1"}, {0.1, 0.0}}};
  try {
    chsh_combination(joints, {"A1", "A2", "B1", "B2"}, {}, {});
    FAIL() << "expected MissingSettingPair";
  } catch (const MissingSettingPair& e) {
    EXPECT_EQ(e.key(), SettingPair("A2", "B2"));
  }
}

TEST(ChshCombination, MalusExampleByQuadrature)
{
  const auto m = DetectionModel::malus_angle();
  const auto grid = build_grid(32, 16, 32);
  const auto s = malus_example();
  const auto q = [&](const Rotation& a, const Rotation& b) {
    return Estimate{quadrature_joint(m, m, relative_rotation(a, b), grid), 0.0};
  };
  const std::map<SettingPair, Estimate> joints{{{"A1", "B1"}, q(s.a1, s.b1)},
                                               {{"A1", "B2"}, q(s.a1, s.b2)},
                                               {{"A2", "B1"}, q(s.a2, s.b1)},
                                               {{"A2", "B2"}, q(s.a2, s.b2)}};
  const Estimate ma2{quadrature_marginal(m, s.a2, grid), 0.0};
  const Estimate mb2{quadrature_marginal(m, s.b2, grid), 0.0};
  const auto rep = chsh_combination(joints, {"A1", "A2", "B1", "B2"}, ma2, mb2);
  EXPECT_NEAR(rep.s, -1.0 / 3.0, 1e-12);
  EXPECT_EQ(rep.verdict, BoundVerdict::kInside);
}

TEST(ChshCombination, FromJointStats)
{
  const std::map<SettingPair, JointStats> joints{{{"a", "b"}, JointStats::from_counts(100, 50, 50, 30)},
                                                 {{"a", "c"}, JointStats::from_counts(100, 50, 50, 20)},
                                                 {{"d", "b"}, JointStats::from_counts(100, 50, 50, 25)},
                                                 {{"d", "c"}, JointStats::from_counts(100, 50, 50, 10)}};
  const auto rep = chsh_combination(joints, {"a", "d", "b", "c"}, {0.5, 0.05}, {0.5, 0.05});
  EXPECT_DOUBLE_EQ(rep.a1b1.value, 0.3);
  EXPECT_DOUBLE_EQ(rep.a2b2.value, 0.1);
  EXPECT_NEAR(rep.s, 0.1 + 0.25 + 0.2 - 0.3 - 1.0, 1e-15);
}

TEST(LambdaBound, ConstantsGiveTheAlgebraicValue)
{
  const auto hidden = hidden_sample(100, 3);
  for (double ca : {0.0, 0.3, 1.0}) {
    for (double cb : {0.0, 0.6, 1.0}) {
      const auto res = check_lambda_bound(DetectionModel::constant(ca), DetectionModel::constant(cb),
                                          malus_example(), hidden);
      const double expected = chsh_form(ca, ca, cb, cb);
      EXPECT_TRUE(res.all_in_bound());
      EXPECT_DOUBLE_EQ(res.min, expected);
      EXPECT_DOUBLE_EQ(res.max, expected);
    }
  }
}

TEST(LambdaBound, MalusHoldsForEveryHiddenRotation)
{
  const auto m = DetectionModel::malus_angle();
  const auto hidden = hidden_sample(100000, 4);
  const auto res = check_lambda_bound(m, m, malus_example(), hidden);
  EXPECT_EQ(res.values.size(), hidden.size());
  EXPECT_TRUE(res.all_in_bound());
  EXPECT_GE(res.min, -1.0);
  EXPECT_LE(res.max, 0.0);
  // The average of the conditional values estimates S itself.
  EXPECT_LT(std::abs(res.mean + 1.0 / 3.0), 4 * res.se_mean);
}

TEST(LambdaBound, RejectsEmptySample)
{
  const auto m = DetectionModel::malus_angle();
  EXPECT_THROW(check_lambda_bound(m, m, malus_example(), {}), std::invalid_argument);
}

TEST(Independence, ConstantsAreUncorrelated)
{
  const auto m = DetectionModel::constant(0.4);
  const auto stats = mc_run(m, m, {"A", Rotation{}}, {"B", Rotation::about_x(1.0)}, 200000, 8);
  const auto rep = independence_report(stats);
  ASSERT_TRUE(rep.z_delta.has_value());
  EXPECT_LT(std::abs(*rep.z_delta), 4.0);
}

TEST(Independence, MalusAtIdentityIsCorrelated)
{
  const auto m = DetectionModel::malus_angle();
  const auto stats = mc_run(m, m, {"A", Rotation{}}, {"B", Rotation{}}, 100000, 9);
  const auto rep = independence_report(stats);
  EXPECT_LT(std::abs(rep.delta - 0.0625), 4 * rep.se_delta);
  ASSERT_TRUE(rep.z_delta.has_value());
  EXPECT_GT(*rep.z_delta, 4.0);
  ASSERT_TRUE(rep.p_b_given_a.has_value());
  EXPECT_GT(rep.p_b_given_a->value, rep.p_b.value);
}

TEST(Independence, DegenerateCounts)
{
  const auto never_a = independence_report(JointStats::from_counts(100, 0, 40, 0));
  EXPECT_FALSE(never_a.p_b_given_a.has_value());
  EXPECT_EQ(never_a.delta, 0.0);

  const auto always = independence_report(JointStats::from_counts(100, 100, 100, 100));
  EXPECT_EQ(always.se_delta, 0.0);
  EXPECT_FALSE(always.z_delta.has_value());
}
