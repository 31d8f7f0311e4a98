#pragma once

#include <functional>
#include <map>
#include <vector>

#include "normgame/engine.hpp"
#include "normgame/rules.hpp"

namespace normgame::testing {

inline PlayerState fresh_player(const PlayerId& id = "P1") {
  PlayerState p;
  p.id = id;
  p.project(ProjectSize::Small).required = {Color::Blue};
  p.project(ProjectSize::Medium).required = {Color::Red, Color::Yellow};
  p.project(ProjectSize::Large).required = {Color::Blue, Color::Red, Color::Yellow};
  return p;
}

inline PlayerState with_loss(PlayerState p, Color c, int lost_at, int deadline = 3) {
  p.slot(c).loss = ImmunityLoss{lost_at, lost_at + deadline};
  return p;
}

inline GameConfig quiet_config(int players = 4) {
  GameConfig c;
  c.player_count = players;
  c.attack_probability = 0.0;
  c.manager_observability = 0.0;
  return c;
}

// Plays a fixed function of the view.
class FnSource final : public ActionSource {
 public:
  explicit FnSource(std::function<Action(const PlayerView&)> fn) : fn_(std::move(fn)) {}
  Action decide(const PlayerView& view) override { return fn_(view); }

 private:
  std::function<Action(const PlayerView&)> fn_;
};

inline std::vector<const Event*> events_of(const EventLog& log, EventKind kind) {
  std::vector<const Event*> out;
  for (const auto& e : log)
    if (e.kind == kind) out.push_back(&e);
  return out;
}

inline ActionMap all(const GameState& s, const Action& a) {
  ActionMap m;
  for (const auto& p : s.players) m[p.id] = a;
  return m;
}

}  // namespace normgame::testing
