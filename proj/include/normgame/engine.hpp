#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "normgame/config.hpp"
#include "normgame/error.hpp"
#include "normgame/event.hpp"
#include "normgame/player.hpp"
#include "normgame/types.hpp"

namespace normgame {

enum class Phase : std::uint8_t { AwaitingActions, Finished };

// Issued during a round, served from the next begin_round.
struct PendingPeerSanction {
  PlayerId issuer;
  PlayerId target;
  friend bool operator==(const PendingPeerSanction&, const PendingPeerSanction&) = default;
};

struct GameState {
  GameConfig config;
  std::string game_id;
  int round = 1;
  // begin_round has run for `round` and submit_round has not.
  bool round_open = false;
  std::vector<PlayerState> players;
  std::uint64_t rng_seed = 0;
  int attack_count = 0;
  int manager_sanction_issuances = 0;
  Phase phase = Phase::AwaitingActions;
  std::vector<PendingPeerSanction> pending_peer_sanctions;
  std::uint64_t next_seq = 1;

  // Throws NotFound.
  std::size_t index_of_player(const PlayerId& id) const;
  const PlayerState& player(const PlayerId& id) const { return players[index_of_player(id)]; }

  friend bool operator==(const GameState&, const GameState&) = default;
};

struct Step {
  GameState state;
  std::vector<Event> events;
};

struct PlayerSeed {
  PlayerId id;
  double risk_score = 0.0;
};

// Emits game-created as seq 1. Throws ConfigError.
Step create_game(const GameConfig& config, std::span<const PlayerSeed> players,
                 std::string game_id = "game");

// Players are named P1..Pn.
GameState new_game(const GameConfig& config, std::span<const double> risk_scores);
std::vector<PlayerSeed> default_player_seeds(std::span<const double> risk_scores);

// Sanction decrement/lift, pending peer sanctions, then the manager's step.
Step begin_round(GameState state);

using ActionMap = std::map<PlayerId, Action>;

// Resolves actions in player order, then attacks. Players in `timed_out`
// are recorded as rejected with reason "timeout" whatever they submitted.
Step submit_round(GameState state, const ActionMap& actions,
                  const std::set<PlayerId>& timed_out = {});

// Everything a player may see: no peer projects, no RNG seed.
struct PeerView {
  PlayerId id;
  int score = 0;
  Compliance compliance = Compliance::Compliant;
  std::array<bool, 3> immunity_held{true, true, true};
  bool sanctioned = false;
  friend bool operator==(const PeerView&, const PeerView&) = default;
};

struct PublicRules {
  int rounds = 40;
  int immunity_deadline = 3;
  std::array<int, 3> project_scores{10, 25, 45};
  Regime regime = Regime::Individual;
  friend bool operator==(const PublicRules&, const PublicRules&) = default;
};

struct PlayerView {
  PlayerState self;
  int round = 1;
  bool forced_skip = false;
  PublicRules rules;
  std::vector<PeerView> peers;
  friend bool operator==(const PlayerView&, const PlayerView&) = default;
};

// Throws NotFound for an unknown player.
PlayerView player_view(const GameState& state, const PlayerId& id);

Json to_json(const PlayerView& v);
Json to_json(const GameState& s);

// A move provider for one seat: a bot, a scripted list, a remote human.
class ActionSource {
 public:
  virtual ~ActionSource() = default;
  virtual Action decide(const PlayerView& view) = 0;
};

class AbortedGame : public Error {
 public:
  AbortedGame(const std::string& what, EventLog partial)
      : Error("game aborted: " + what), partial_(std::move(partial)) {}
  const EventLog& partial_log() const noexcept { return partial_; }

 private:
  EventLog partial_;
};

struct RunOptions {
  std::string game_id = "game";
  // Default P1..Pn with risk score 0.
  std::vector<PlayerSeed> players;
};

// Drives a whole game headlessly. `seed` replaces config.seed.
EventLog run_game(GameConfig config, std::span<ActionSource* const> sources, std::uint64_t seed,
                  const RunOptions& options = {});

}  // namespace normgame
