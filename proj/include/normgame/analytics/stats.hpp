#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "normgame/error.hpp"

namespace normgame::analytics {

class DegenerateVariance : public Error {
 public:
  using Error::Error;
};

double mean(std::span<const double> xs);
// n - 1 denominator.
double sample_variance(std::span<const double> xs);

// Regularized incomplete beta I_x(a, b), relative accuracy ~1e-12.
double regularized_incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);
// P(|T| >= |t|) for T ~ Student-t(df).
double student_t_two_tailed_p(double t, double df);

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p_two_tailed = 1.0;
};

// Two-tailed paired test on d = a - b. Throws InputError on length mismatch or
// n < 2; DegenerateVariance when every difference is the same nonzero value.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Small-sample factor J = 1 - 3 / (4 (n1 + n2 - 2) - 1).
double hedges_correction(std::size_t n1, std::size_t n2);

// J * (mean(a) - mean(b)) / s_pooled. Throws DegenerateVariance when the
// pooled variance is zero and the means differ.
double hedges_g(std::span<const double> a, std::span<const double> b);

enum class EffectLabel { Negligible, Small, Medium, Large };

EffectLabel effect_label(double g);
std::string_view to_string(EffectLabel l);

enum class RiskClass { RiskAverse, RiskSeeking };

std::string_view to_string(RiskClass c);

// Median split: strictly above the cohort median is risk-seeking.
std::vector<RiskClass> classify_risk(std::span<const double> scores);

}  // namespace normgame::analytics
