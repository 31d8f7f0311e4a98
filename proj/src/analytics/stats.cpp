#include "normgame/analytics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace normgame::analytics {

namespace {

bool all_equal(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InputError("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw InputError("sample variance needs at least two values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InputError("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, double df) {
  if (!(df > 0.0)) throw InputError("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(regularized_incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_tailed_p(t, df);
  return t < 0.0 ? tail : 1.0 - tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("paired t-test needs samples of equal length");
  if (a.size() < 2) throw InputError("paired t-test needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const int df = static_cast<int>(d.size()) - 1;
  if (all_equal(d)) {
    if (d.front() == 0.0) return {0.0, df, 1.0};
    throw DegenerateVariance("paired differences are constant and nonzero");
  }
  const double md = mean(d);
  const double sd = std::sqrt(sample_variance(d));
  const double t = md / (sd / std::sqrt(static_cast<double>(d.size())));
  return {t, df, student_t_two_tailed_p(t, df)};
}

double hedges_correction(std::size_t n1, std::size_t n2) {
  const double dof = static_cast<double>(n1 + n2) - 2.0;
  return 1.0 - 3.0 / (4.0 * dof - 1.0);
}

double hedges_g(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InputError("hedges' g needs at least two values per group");
  const double diff = mean(a) - mean(b);
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double pooled = ((n1 - 1.0) * sample_variance(a) + (n2 - 1.0) * sample_variance(b)) / (n1 + n2 - 2.0);
  if (all_equal(a) && all_equal(b)) {
    if (diff == 0.0) return 0.0;
    throw DegenerateVariance("pooled variance is zero and the means differ");
  }
  return hedges_correction(a.size(), b.size()) * diff / std::sqrt(pooled);
}

EffectLabel effect_label(double g) {
  const double m = std::fabs(g);
  if (m >= 0.80) return EffectLabel::Large;
  if (m >= 0.50) return EffectLabel::Medium;
  if (m >= 0.20) return EffectLabel::Small;
  return EffectLabel::Negligible;
}

std::string_view to_string(EffectLabel l) {
  switch (l) {
    case EffectLabel::Negligible: return "negligible";
    case EffectLabel::Small: return "small";
    case EffectLabel::Medium: return "medium";
    case EffectLabel::Large: return "large";
  }
  return "?";
}

std::string_view to_string(RiskClass c) { return c == RiskClass::RiskSeeking ? "risk-seeking" : "risk-averse"; }

std::vector<RiskClass> classify_risk(std::span<const double> scores) {
  if (scores.size() < 2) throw InputError("risk classification needs at least two scores");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::vector<RiskClass> out;
  out.reserve(n);
  for (double s : scores) out.push_back(s > median ? RiskClass::RiskSeeking : RiskClass::RiskAverse);
  return out;
}

}  // namespace normgame::analytics
