#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "normgame/analytics/metrics.hpp"
#include "normgame/analytics/stats.hpp"
#include "normgame/json_io.hpp"

namespace normgame::analytics {

class PairingError : public Error {
 public:
  PairingError(const std::string& what, std::vector<std::string> orphans)
      : Error(what), orphans_(std::move(orphans)) {}
  const std::vector<std::string>& orphans() const noexcept { return orphans_; }

 private:
  std::vector<std::string> orphans_;
};

struct TestResult {
  double t_statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_two_tailed = 1.0;
  double hedges_g = 0.0;
  EffectLabel effect = EffectLabel::Negligible;
};

struct Comparison {
  std::string metric;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::size_t pairs = 0;
  TestResult result;
  // Pairing keys dropped because the metric was absent on either side.
  std::vector<std::string> exclusions;
};

using PairingKey = std::function<std::string(const MetricsRecord&)>;

std::string by_player(const MetricsRecord& r);

// Records sharing a key are averaged within each group, then paired by key.
// Throws PairingError when a key appears in only one group, InputError when
// fewer than two usable pairs remain, DegenerateVariance from the statistics.
Comparison compare(std::span<const MetricsRecord> group_a, std::span<const MetricsRecord> group_b,
                   const std::string& metric, const PairingKey& key = by_player);

// Runs paired_t_test and hedges_g on already-paired samples.
TestResult test_pairs(std::span<const double> a, std::span<const double> b);

Json to_json(const Comparison& c);

}  // namespace normgame::analytics
