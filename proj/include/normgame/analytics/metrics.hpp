#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "normgame/event.hpp"
#include "normgame/types.hpp"

namespace normgame::analytics {

// Per-player-per-game aggregates. Game-level fields repeat across a game's
// records. Optional fields are absent when their denominator is zero.
struct MetricsRecord {
  std::string game_id;
  PlayerId player_id;
  Regime regime = Regime::Individual;
  // 1 for a participant's first game under `regime`, 2 for the second; 0 when unknown.
  int regime_ordinal = 0;
  double risk_score = 0.0;
  int immunity_loss_count = 0;
  int immunity_repaired_before_deadline_count = 0;
  std::optional<double> compliance_rate;
  int manager_sanction_issuances = 0;
  int attacks_in_game = 0;
  std::optional<double> sanctions_per_100_attacks;
  int score = 0;
  int rounds_skipped = 0;
  // Mean of regain round - loss round; losses never regained count up to the
  // last round and are tallied in censored_loss_count.
  std::optional<double> resilience_mean_rounds;
  int censored_loss_count = 0;
  int peer_sanctions_issued = 0;
  int project_tasks_completed = 0;
  std::optional<double> score_per_task;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

// One record per player, in player order. Throws CorruptionError.
std::vector<MetricsRecord> compute_metrics(const EventLog& log);

// Names accepted by metric_value / compare.
const std::vector<std::string>& metric_names();

// Throws InputError for an unknown name.
std::optional<double> metric_value(const MetricsRecord& r, std::string_view metric);

}  // namespace normgame::analytics
