#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "normgame/agents/policy.hpp"
#include "normgame/analytics/metrics.hpp"
#include "normgame/config.hpp"
#include "normgame/json_io.hpp"

namespace normgame::experiment {

struct PolicyAssignment {
  agents::PolicySpec fallback;
  // Applied round-robin by participant index when nonempty.
  std::vector<agents::PolicySpec> cycle;
  std::map<int, agents::PolicySpec> overrides;

  agents::PolicySpec for_participant(int index) const;
};

struct ExperimentSpec {
  std::string name = "experiment";
  int cohort_size = 4;
  int group_size = 4;
  std::vector<Regime> schedule{Regime::Individual, Regime::Individual, Regime::Group, Regime::Group};
  bool shuffle_schedule = true;
  PolicyAssignment policies;
  // One per participant; empty means theta for risk-weighted bots, else 0.5.
  std::vector<double> risk_scores;
  std::uint64_t base_seed = 1;
  std::filesystem::path output_dir;
  // Template for every game; regime, seed and player_count are set per game.
  GameConfig game;

  void validate() const;
};

// Throws ConfigError.
ExperimentSpec spec_from_json(const Json& j);
ExperimentSpec read_spec(const std::filesystem::path& path);

struct ScheduledGame {
  std::string game_id;
  int group = 0;
  int game_index = 0;
  Regime regime = Regime::Individual;
  int regime_ordinal = 1;
  std::uint64_t seed = 0;
  std::vector<int> participants;
};

std::string participant_id(const ExperimentSpec& spec, int index);
double participant_risk(const ExperimentSpec& spec, int index);

// Groups are consecutive index blocks; a trailing block of one is rejected.
std::vector<std::vector<int>> form_groups(const ExperimentSpec& spec);
std::vector<ScheduledGame> schedule_games(const ExperimentSpec& spec);

// Logs and metrics of one scheduled game, computed in memory.
struct GameOutcome {
  ScheduledGame game;
  EventLog log;
  std::vector<analytics::MetricsRecord> metrics;
};

GameOutcome play_scheduled_game(const ExperimentSpec& spec, const ScheduledGame& game);

struct Artifacts {
  std::vector<std::filesystem::path> logs;
  std::filesystem::path metrics_csv;
  std::filesystem::path report_json;
  std::filesystem::path report_text;
};

// Writes logs/<game_id>.jsonl, metrics.csv, report.json and report.txt.
Artifacts run_experiment(const ExperimentSpec& spec);

inline const std::vector<std::string> kReportMetrics{"complianceRate", "sanctionsPer100Attacks", "score",
                                                     "roundsSkipped", "resilienceMeanRounds"};

// Regime-vs-regime comparisons, second-minus-first learning deltas, per-risk-class splits.
Json comparison_report(const std::vector<analytics::MetricsRecord>& records, Regime a, Regime b,
                       const std::vector<std::string>& metrics = kReportMetrics);
std::string render_report(const Json& report);

}  // namespace normgame::experiment
