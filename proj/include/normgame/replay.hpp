#pragma once

#include <optional>
#include <vector>

#include "normgame/engine.hpp"
#include "normgame/event.hpp"

namespace normgame {

// Rebuilds a GameState from its event log without drawing randomness: attacks,
// observations and re-rolled projects are read from the events. Every event is
// checked against the rules; the first inconsistency raises CorruptionError.
class Replayer {
 public:
  void apply(const Event& e);

  bool has_game() const { return state_.has_value(); }
  // Throws LifecycleError before game-created has been applied.
  const GameState& state() const;

 private:
  struct ExpectedLift {
    PlayerId player;
    std::string sanction;
    ColorSet restored;
  };
  struct PendingBank {
    std::size_t player;
    ProjectSize size;
  };

  void apply_created(const Event& e);
  void apply_round_started(const Event& e);
  void apply_lift(const Event& e);
  void apply_observed(const Event& e);
  void apply_sanctioned(const Event& e);
  void apply_submitted(const Event& e);
  void apply_resolved(const Event& e, bool applied);
  void apply_banked(const Event& e);
  void apply_attack_event(const Event& e);
  void apply_game_over(const Event& e);
  void maybe_close_actions(const Event& e);
  std::size_t player_index(const Event& e, const char* field) const;

  std::optional<GameState> state_;
  std::uint64_t last_seq_ = 0;
  std::vector<ExpectedLift> expected_lifts_;
  std::size_t resolved_ = 0;
  std::optional<std::size_t> submitted_;
  Json submitted_action_;
  std::vector<PlayerState> observed_;
  std::optional<PendingBank> pending_bank_;
  std::optional<int> environment_round_;
  std::optional<std::size_t> last_observed_;
  std::optional<std::size_t> last_attacked_;
};

// Throws CorruptionError for an empty, gapped or inconsistent log.
GameState replay(const EventLog& log);

}  // namespace normgame
