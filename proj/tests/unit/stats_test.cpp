#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "normgame/analytics/stats.hpp"

using namespace normgame;
using namespace normgame::analytics;

namespace {

double oracle_two_tailed(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

std::vector<double> scaled(std::vector<double> xs, double c) {
  for (double& x : xs) x *= c;
  return xs;
}

}  // namespace

TEST(IncompleteBeta, MatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 10.0, 50.0})
    for (double b : {0.5, 1.0, 3.0, 20.0})
      for (double x : {0.001, 0.1, 0.37, 0.5, 0.9, 0.999}) {
        const double want = boost::math::ibeta(a, b, x);
        EXPECT_NEAR(regularized_incomplete_beta(a, b, x), want, 1e-12 + 1e-10 * want) << a << ' ' << b << ' ' << x;
      }
  EXPECT_EQ(regularized_incomplete_beta(2, 3, 0.0), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(2, 3, 1.0), 1.0);
  EXPECT_THROW(regularized_incomplete_beta(0, 3, 0.5), InputError);
}

TEST(StudentT, CdfIsSymmetric) {
  for (double df : {1.0, 2.0, 7.0, 30.0})
    for (double t : {0.0, 0.3, 1.0, 2.5, 8.0}) {
      EXPECT_NEAR(student_t_cdf(t, df) + student_t_cdf(-t, df), 1.0, 1e-14);
    }
  EXPECT_DOUBLE_EQ(student_t_cdf(0.0, 5.0), 0.5);
}

TEST(StudentT, TwoTailedPMatchesOracleForDfOneToHundred) {
  double worst = 0.0;
  for (int df = 1; df <= 100; ++df)
    for (double t : {0.0, 0.05, 0.5, 1.0, 1.96, 2.5, 3.4641, 5.0, 12.0, 40.0}) {
      const double got = student_t_two_tailed_p(t, df);
      worst = std::max(worst, std::fabs(got - oracle_two_tailed(t, df)));
      EXPECT_NEAR(student_t_two_tailed_p(-t, df), got, 1e-15);
    }
  EXPECT_LT(worst, 1e-6);
}

TEST(PairedTTest, HandFixture) {
  const std::vector<double> a{1, 2, 3}, b{0, 0, 0};
  const auto r = paired_t_test(a, b);
  EXPECT_NEAR(r.t, 2.0 * std::sqrt(3.0), 1e-12);
  EXPECT_EQ(r.df, 2);
  EXPECT_NEAR(r.p_two_tailed, 0.0742, 5e-5);
  EXPECT_NEAR(r.p_two_tailed, oracle_two_tailed(r.t, 2), 1e-9);
}

TEST(PairedTTest, NullCases) {
  const std::vector<double> a{3, 1, 4, 1, 5};
  auto same = paired_t_test(a, a);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p_two_tailed, 1.0);

  const std::vector<double> d{1, -1, 1, -1}, z{0, 0, 0, 0};
  auto alt = paired_t_test(d, z);
  EXPECT_EQ(alt.t, 0.0);
  EXPECT_DOUBLE_EQ(alt.p_two_tailed, 1.0);
}

TEST(PairedTTest, Errors) {
  const std::vector<double> a{1, 2, 3}, b{1, 2};
  EXPECT_THROW(paired_t_test(a, b), InputError);
  const std::vector<double> one{1};
  EXPECT_THROW(paired_t_test(one, one), InputError);
  const std::vector<double> shifted{2, 3, 4};
  EXPECT_THROW(paired_t_test(shifted, a), DegenerateVariance);
}

TEST(HedgesG, HandFixture) {
  const std::vector<double> a{2, 4, 6}, b{1, 3, 5};
  EXPECT_NEAR(hedges_correction(3, 3), 0.8, 1e-15);
  EXPECT_NEAR(hedges_g(a, b), 0.4, 1e-9);
}

TEST(HedgesG, UnequalSizesFixture) {
  // s1^2 = 2, s2^2 = 20/3, pooled = (2 + 20) / 4 = 5.5, J = 1 - 3/15 = 0.8.
  const std::vector<double> a{4, 6}, b{0, 2, 4, 6};
  EXPECT_NEAR(hedges_g(a, b), 0.8 * 2.0 / std::sqrt(5.5), 1e-9);
}

TEST(HedgesG, IdenticalAndDegenerate) {
  const std::vector<double> a{1, 2, 3, 4};
  EXPECT_EQ(hedges_g(a, a), 0.0);
  const std::vector<double> c1{2, 2}, c2{5, 5};
  EXPECT_THROW(hedges_g(c1, c2), DegenerateVariance);
  EXPECT_EQ(hedges_g(c1, c1), 0.0);
  const std::vector<double> one{1};
  EXPECT_THROW(hedges_g(one, a), InputError);
}

TEST(EffectLabel, SwitchesExactlyAtThresholds) {
  EXPECT_EQ(effect_label(0.0), EffectLabel::Negligible);
  EXPECT_EQ(effect_label(std::nextafter(0.20, 0.0)), EffectLabel::Negligible);
  EXPECT_EQ(effect_label(0.20), EffectLabel::Small);
  EXPECT_EQ(effect_label(std::nextafter(0.50, 0.0)), EffectLabel::Small);
  EXPECT_EQ(effect_label(0.50), EffectLabel::Medium);
  EXPECT_EQ(effect_label(std::nextafter(0.80, 0.0)), EffectLabel::Medium);
  EXPECT_EQ(effect_label(0.80), EffectLabel::Large);
  EXPECT_EQ(effect_label(-0.80), EffectLabel::Large);
  EXPECT_EQ(effect_label(-0.2), EffectLabel::Small);
  EXPECT_EQ(to_string(EffectLabel::Medium), "medium");
}

TEST(ClassifyRisk, MedianSplit) {
  using R = RiskClass;
  const std::vector<double> s1{1, 2, 3, 10};
  EXPECT_EQ(classify_risk(s1), (std::vector<R>{R::RiskAverse, R::RiskAverse, R::RiskSeeking, R::RiskSeeking}));
  const std::vector<double> s2{4, 4, 4};
  EXPECT_EQ(classify_risk(s2), (std::vector<R>{R::RiskAverse, R::RiskAverse, R::RiskAverse}));
  const std::vector<double> s3{0, 1};
  EXPECT_EQ(classify_risk(s3), (std::vector<R>{R::RiskAverse, R::RiskSeeking}));
  const std::vector<double> s4{5, 1, 3};
  EXPECT_EQ(classify_risk(s4), (std::vector<R>{R::RiskSeeking, R::RiskAverse, R::RiskAverse}));
  EXPECT_THROW(classify_risk(std::vector<double>{}), InputError);
}

class StatsProperty : public ::testing::TestWithParam<int> {};

TEST_P(StatsProperty, ScaleShiftAndSymmetry) {
  std::mt19937_64 gen(static_cast<std::uint64_t>(GetParam()));
  std::normal_distribution<double> nd(0.0, 3.0);
  std::uniform_int_distribution<int> size(2, 30);
  const int n = size(gen);
  std::vector<double> a(n), b(n);
  for (double& x : a) x = nd(gen);
  for (double& x : b) x = nd(gen) + 0.5;

  const double g = hedges_g(a, b);
  EXPECT_NEAR(hedges_g(b, a), -g, 1e-12);
  for (double c : {2.5, -0.3, 1e3}) {
    EXPECT_NEAR(hedges_g(scaled(a, c), scaled(b, c)), (c > 0 ? 1 : -1) * g, 1e-9 * (1 + std::fabs(g)));
  }

  const auto base = paired_t_test(a, b);
  std::vector<double> a2 = a, b2 = b;
  for (std::size_t i = 0; i < a2.size(); ++i) {
    a2[i] += 17.0;
    b2[i] += 17.0;
  }
  const auto shifted = paired_t_test(a2, b2);
  EXPECT_NEAR(shifted.t, base.t, 1e-9 * (1 + std::fabs(base.t)));
  EXPECT_NEAR(base.p_two_tailed, oracle_two_tailed(base.t, base.df), 1e-6);
  EXPECT_GE(base.p_two_tailed, 0.0);
  EXPECT_LE(base.p_two_tailed, 1.0);
}

INSTANTIATE_TEST_SUITE_P(Seeds, StatsProperty, ::testing::Range(1, 51));
