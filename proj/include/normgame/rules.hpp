#pragma once

#include <optional>
#include <span>
#include <string>

#include "normgame/config.hpp"
#include "normgame/player.hpp"
#include "normgame/rng.hpp"
#include "normgame/types.hpp"

// Pure single-player transitions of the game's state machine.
namespace normgame {

// A lost immunity is tolerated through its deadline round inclusive.
Compliance compliance_status(const PlayerState& player, int round);

// Colors lost with round > deadline_round.
ColorSet overdue_colors(const PlayerState& player, int round);

// Why an action is disabled, or nullopt when it is enabled.
std::optional<std::string> rejection_reason(const PlayerState& player,
                                            std::span<const PlayerState> peers,
                                            const Action& action, int round);

bool is_action_enabled(const PlayerState& player, std::span<const PlayerState> peers,
                       const Action& action, int round);

PlayerState apply_attack(PlayerState player, AttackKind kind, int round, const GameConfig& config);

// Throws InvalidAction when `color` is not lost.
PlayerState apply_immunity_task(PlayerState player, Color color, int round);

struct ProjectTaskResult {
  PlayerState player;
  int banked_points = 0;
};

// Throws InvalidAction when the task is disabled. Completing the last task
// banks the project score and re-rolls the project from `rng`.
ProjectTaskResult apply_project_task(PlayerState player, ProjectSize size, Color color, Rng& rng,
                                     const GameConfig& config);

// Uniform subset of `count` distinct colors.
ColorSet roll_required_tasks(int count, Rng& rng);

// nullopt is "no attack this round".
std::optional<AttackKind> sample_attack(Rng& rng, const GameConfig& config);

}  // namespace normgame
