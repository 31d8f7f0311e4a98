#include "normgame/config.hpp"

#include <fmt/format.h>

#include "normgame/error.hpp"

namespace normgame {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid game config: " + what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void GameConfig::validate() const {
  require(rounds > 0, "rounds must be positive");
  require(is_probability(attack_probability), "attack_probability must be in [0,1]");
  require(is_probability(manager_observability), "manager_observability must be in [0,1]");
  require(immunity_deadline > 0, "immunity_deadline must be positive");
  require(sanction_rounds_per_violation > 0, "sanction_rounds_per_violation must be positive");
  require(peer_sanction_duration > 0, "peer_sanction_duration must be positive");
  for (ProjectSize s : kProjectSizes) {
    require(score_for(s) >= 0, fmt::format("{} project score must be nonnegative", to_string(s)));
    require(tasks_for(s) >= 1 && tasks_for(s) <= 3,
            fmt::format("{} project task count must be in [1,3]", to_string(s)));
  }
  double total = 0.0;
  for (double w : attack_kind_weights) {
    require(w >= 0.0, "attack_kind_weights must be nonnegative");
    total += w;
  }
  require(total > 0.0, "attack_kind_weights must have a positive sum");
  require(player_count >= 2 && player_count <= 5, "player_count must be in [2,5]");
}

}  // namespace normgame
