#pragma once

#include <array>
#include <cstdint>

#include "normgame/types.hpp"

namespace normgame {

// Every tunable of one game. Defaults are the study's parameter settings.
struct GameConfig {
  int rounds = 40;
  double attack_probability = 0.35;
  double manager_observability = 0.33;
  int immunity_deadline = 3;
  std::array<int, 3> project_scores{10, 25, 45};    // indexed by ProjectSize
  std::array<int, 3> project_task_counts{1, 2, 3};  // indexed by ProjectSize
  int sanction_rounds_per_violation = 2;
  int peer_sanction_duration = 1;
  std::array<double, 4> attack_kind_weights{3.0, 3.0, 3.0, 1.0};  // blue, red, yellow, black
  Regime regime = Regime::Individual;
  std::uint64_t seed = 0;
  int player_count = 4;

  int score_for(ProjectSize s) const { return project_scores[index_of(s)]; }
  int tasks_for(ProjectSize s) const { return project_task_counts[index_of(s)]; }

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  friend bool operator==(const GameConfig&, const GameConfig&) = default;
};

}  // namespace normgame
