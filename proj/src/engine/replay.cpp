#include "normgame/replay.hpp"

#include <fmt/format.h>

#include "normgame/rules.hpp"

namespace normgame {

namespace {

[[noreturn]] void corrupt(const Event& e, const std::string& what) { throw CorruptionError(e.seq, what); }

template <class T>
T field(const Event& e, const char* key) {
  if (!e.payload.contains(key)) corrupt(e, fmt::format("{} payload lacks '{}'", to_string(e.kind), key));
  try {
    return e.payload.at(key).get<T>();
  } catch (const nlohmann::json::exception& err) {
    corrupt(e, fmt::format("{} payload field '{}': {}", to_string(e.kind), key, err.what()));
  }
}

ColorSet colors_field(const Event& e, const char* key) {
  if (!e.payload.contains(key)) corrupt(e, fmt::format("{} payload lacks '{}'", to_string(e.kind), key));
  try {
    return color_set_from_json(e.payload.at(key));
  } catch (const Error& err) {
    corrupt(e, fmt::format("field '{}': {}", key, err.what()));
  }
}

}  // namespace

const GameState& Replayer::state() const {
  if (!state_) throw LifecycleError("no game-created event applied yet");
  return *state_;
}

std::size_t Replayer::player_index(const Event& e, const char* key) const {
  const auto id = field<std::string>(e, key);
  for (std::size_t i = 0; i < state_->players.size(); ++i)
    if (state_->players[i].id == id) return i;
  corrupt(e, "unknown player '" + id + "'");
}

void Replayer::apply(const Event& e) {
  if (e.seq != last_seq_ + 1) corrupt(e, fmt::format("expected seq {}", last_seq_ + 1));
  if (!state_) {
    if (e.kind != EventKind::GameCreated) corrupt(e, "log must start with game-created");
    apply_created(e);
  } else {
    if (e.game_id != state_->game_id) corrupt(e, "game id changed to '" + e.game_id + "'");
    if (e.kind == EventKind::GameCreated) corrupt(e, "duplicate game-created");
    if (state_->phase == Phase::Finished) corrupt(e, "event after game-over");
    if (!expected_lifts_.empty() && e.kind != EventKind::SanctionLifted)
      corrupt(e, "missing sanction-lifted for " + expected_lifts_.front().player);
    if (pending_bank_ && e.kind != EventKind::ProjectBanked) corrupt(e, "missing project-banked");
    switch (e.kind) {
      case EventKind::GameCreated: break;
      case EventKind::RoundStarted: apply_round_started(e); break;
      case EventKind::SanctionLifted: apply_lift(e); break;
      case EventKind::ManagerObserved: apply_observed(e); break;
      case EventKind::ManagerSanctioned: apply_sanctioned(e); break;
      case EventKind::ActionSubmitted: apply_submitted(e); break;
      case EventKind::ActionApplied: apply_resolved(e, true); break;
      case EventKind::ActionRejected: apply_resolved(e, false); break;
      case EventKind::ProjectBanked: apply_banked(e); break;
      case EventKind::Attack: apply_attack_event(e); break;
      case EventKind::GameOver: apply_game_over(e); break;
    }
  }
  last_seq_ = e.seq;
  state_->next_seq = e.seq + 1;
}

void Replayer::apply_created(const Event& e) {
  GameConfig config;
  try {
    if (!e.payload.contains("config")) corrupt(e, "game-created lacks config");
    config = config_from_json(e.payload.at("config"));
  } catch (const ConfigError& err) {
    corrupt(e, err.what());
  }
  if (!e.payload.contains("players") || !e.payload.at("players").is_array())
    corrupt(e, "game-created lacks players");
  const Json& players = e.payload.at("players");
  if (static_cast<int>(players.size()) != config.player_count)
    corrupt(e, "player list does not match player_count");

  GameState s;
  s.config = config;
  s.game_id = e.game_id;
  s.rng_seed = config.seed;
  for (const Json& pj : players) {
    PlayerState p;
    try {
      p.id = pj.at("id").get<std::string>();
      p.risk_score = pj.at("risk_score").get<double>();
      for (ProjectSize size : kProjectSizes) {
        ColorSet req = color_set_from_json(pj.at("projects").at(std::string(to_string(size))));
        if (static_cast<int>(req.size()) != config.tasks_for(size))
          corrupt(e, fmt::format("{} project of {} has wrong task count", to_string(size), p.id));
        p.project(size).required = req;
      }
    } catch (const nlohmann::json::exception& err) {
      corrupt(e, std::string("player entry: ") + err.what());
    } catch (const InputError& err) {
      corrupt(e, std::string("player entry: ") + err.what());
    }
    for (const PlayerState& other : s.players)
      if (other.id == p.id) corrupt(e, "duplicate player id '" + p.id + "'");
    s.players.push_back(std::move(p));
  }
  state_ = std::move(s);
}

void Replayer::apply_round_started(const Event& e) {
  GameState& s = *state_;
  if (s.round_open || (resolved_ != 0 && !environment_round_))
    corrupt(e, "round-started while a round is in progress");
  if (environment_round_ && *environment_round_ == s.round) corrupt(e, "round-started after the final round");
  if (e.round != s.round) corrupt(e, fmt::format("round-started for round {}, expected {}", e.round, s.round));
  environment_round_.reset();
  last_observed_.reset();
  last_attacked_.reset();
  resolved_ = 0;

  for (PlayerState& p : s.players) {
    if (auto* m = std::get_if<ManagerSanction>(&p.sanction)) {
      if (--m->rounds_remaining == 0) {
        const ColorSet restore = m->restore;
        for (Color c : restore.to_vector()) {
          p.slot(c).loss.reset();
          p.slot(c).capability_available = true;
        }
        p.sanction = NoSanction{};
        expected_lifts_.push_back({p.id, "manager", restore});
      }
    } else if (auto* ps = std::get_if<PeerSanctionStatus>(&p.sanction)) {
      if (--ps->rounds_remaining == 0) {
        p.sanction = NoSanction{};
        expected_lifts_.push_back({p.id, "peer", {}});
      }
    }
  }
  for (const PendingPeerSanction& pending : s.pending_peer_sanctions) {
    PlayerState& target = s.players[s.index_of_player(pending.target)];
    if (!is_sanctioned(target.sanction)) target.sanction = PeerSanctionStatus{s.config.peer_sanction_duration};
  }
  s.pending_peer_sanctions.clear();
  s.round_open = true;
}

void Replayer::apply_lift(const Event& e) {
  if (expected_lifts_.empty()) corrupt(e, "unexpected sanction-lifted");
  const ExpectedLift want = expected_lifts_.front();
  if (field<std::string>(e, "player") != want.player || field<std::string>(e, "sanction") != want.sanction ||
      colors_field(e, "restored") != want.restored)
    corrupt(e, "sanction-lifted does not match the expiring sanction of " + want.player);
  expected_lifts_.erase(expected_lifts_.begin());
}

void Replayer::apply_observed(const Event& e) {
  const GameState& s = *state_;
  if (!s.round_open || resolved_ != 0 || submitted_) corrupt(e, "manager-observed outside the manager step");
  const std::size_t i = player_index(e, "player");
  if (last_observed_ && i <= *last_observed_) corrupt(e, "manager observations out of player order");
  last_observed_ = i;
  const ColorSet overdue = overdue_colors(s.players[i], s.round);
  if (field<bool>(e, "compliant") != overdue.empty() || colors_field(e, "overdue") != overdue)
    corrupt(e, "manager-observed disagrees with the player's immunities");
}

void Replayer::apply_sanctioned(const Event& e) {
  GameState& s = *state_;
  if (!s.round_open || resolved_ != 0 || submitted_) corrupt(e, "manager-sanctioned outside the manager step");
  const std::size_t i = player_index(e, "violator");
  if (last_observed_ != i) corrupt(e, "manager-sanctioned without a preceding observation");
  PlayerState& violator = s.players[i];
  const ColorSet overdue = overdue_colors(violator, s.round);
  if (overdue.empty()) corrupt(e, "sanctioned player is compliant");
  if (is_manager_sanctioned(violator.sanction)) corrupt(e, "player is already serving a manager sanction");
  const int duration = s.config.sanction_rounds_per_violation * static_cast<int>(overdue.size());
  if (field<int>(e, "duration") != duration) corrupt(e, fmt::format("sanction duration must be {}", duration));
  if (colors_field(e, "colors") != overdue) corrupt(e, "sanctioned colors differ from overdue colors");
  if (field<std::string>(e, "regime") != to_string(s.config.regime)) corrupt(e, "regime mismatch");

  Json targets = Json::array();
  if (s.config.regime == Regime::Individual) {
    violator.sanction = ManagerSanction{duration, overdue, false};
    targets.push_back(violator.id);
  } else {
    for (std::size_t k = 0; k < s.players.size(); ++k) {
      PlayerState& p = s.players[k];
      if (k == i) p.sanction = ManagerSanction{duration, overdue, false};
      else if (!is_manager_sanctioned(p.sanction)) p.sanction = ManagerSanction{duration, {}, true};
      else continue;
      targets.push_back(p.id);
    }
  }
  if (!e.payload.contains("targets") || e.payload.at("targets") != targets)
    corrupt(e, "sanction targets differ from the regime's rule");
  ++s.manager_sanction_issuances;
}

void Replayer::apply_submitted(const Event& e) {
  const GameState& s = *state_;
  if (!s.round_open || submitted_ || resolved_ >= s.players.size()) corrupt(e, "unexpected action-submitted");
  if (e.round != s.round) corrupt(e, "action for the wrong round");
  const std::size_t i = player_index(e, "player");
  if (i != resolved_) corrupt(e, "actions out of player order");
  if (!e.payload.contains("action")) corrupt(e, "action-submitted lacks action");
  try {
    action_from_json(e.payload.at("action"));
  } catch (const InputError& err) {
    corrupt(e, err.what());
  }
  if (i == 0) observed_ = s.players;
  submitted_ = i;
  submitted_action_ = e.payload.at("action");
}

void Replayer::apply_resolved(const Event& e, bool applied) {
  GameState& s = *state_;
  if (!submitted_) corrupt(e, "resolution without action-submitted");
  const std::size_t i = player_index(e, "player");
  if (i != *submitted_ || !e.payload.contains("action") || e.payload.at("action") != submitted_action_)
    corrupt(e, "resolution does not match the submitted action");
  const Action action = action_from_json(submitted_action_);
  PlayerState& p = s.players[i];
  const auto reason = rejection_reason(p, observed_, action, s.round);

  if (!applied) {
    const auto given = field<std::string>(e, "reason");
    if (given != "timeout" && !reason) corrupt(e, "rejected action was enabled");
  } else {
    if (reason) corrupt(e, "applied action was disabled: " + *reason);
    if (const auto* t = std::get_if<CompleteProjectTask>(&action)) {
      Project& pr = p.project(t->size);
      pr.completed.insert(t->color);
      if (pr.completed == pr.required) pending_bank_ = PendingBank{i, t->size};
    } else if (const auto* t = std::get_if<CompleteImmunityTask>(&action)) {
      p = apply_immunity_task(p, t->color, s.round);
    } else if (const auto* t = std::get_if<PeerSanction>(&action)) {
      s.pending_peer_sanctions.push_back(PendingPeerSanction{p.id, t->target});
    }
  }
  submitted_.reset();
  ++resolved_;
  maybe_close_actions(e);
}

void Replayer::apply_banked(const Event& e) {
  GameState& s = *state_;
  if (!pending_bank_) corrupt(e, "project-banked without a completed project");
  const std::size_t i = player_index(e, "player");
  auto size = parse_project_size(field<std::string>(e, "size"));
  if (i != pending_bank_->player || size != pending_bank_->size) corrupt(e, "project-banked for the wrong project");
  const int points = s.config.score_for(*size);
  if (field<int>(e, "points") != points) corrupt(e, fmt::format("banked points must be {}", points));
  const ColorSet next = colors_field(e, "next_required");
  if (static_cast<int>(next.size()) != s.config.tasks_for(*size)) corrupt(e, "re-rolled project has wrong size");
  PlayerState& p = s.players[i];
  p.score += points;
  p.project(*size).required = next;
  p.project(*size).completed = ColorSet{};
  pending_bank_.reset();
  maybe_close_actions(e);
}

void Replayer::maybe_close_actions(const Event& e) {
  GameState& s = *state_;
  if (resolved_ < s.players.size() || pending_bank_) return;
  environment_round_ = e.round;
  s.round_open = false;
  if (s.round < s.config.rounds) ++s.round;
}

void Replayer::apply_attack_event(const Event& e) {
  GameState& s = *state_;
  if (environment_round_ != e.round) corrupt(e, "attack outside the environment step");
  const std::size_t i = player_index(e, "player");
  if (last_attacked_ && i <= *last_attacked_) corrupt(e, "attacks out of player order");
  last_attacked_ = i;
  auto kind = parse_attack_kind(field<std::string>(e, "kind"));
  if (!kind) corrupt(e, "unknown attack kind");
  PlayerState& p = s.players[i];
  const PlayerState before = p;
  p = apply_attack(p, *kind, e.round, s.config);
  if (e.payload.contains("effects")) {
    for (Color c : affected_colors(*kind).to_vector()) {
      const char* effect = before.slot(c).held() && !p.slot(c).held() ? "immunity_lost"
                           : before.slot(c).capability_available && !p.slot(c).capability_available
                               ? "capability_lost"
                               : "none";
      const auto& effects = e.payload.at("effects");
      const std::string key(to_string(c));
      if (!effects.contains(key) || effects.at(key) != effect) corrupt(e, "attack effects disagree with state");
    }
  }
  ++s.attack_count;
}

void Replayer::apply_game_over(const Event& e) {
  GameState& s = *state_;
  if (environment_round_ != s.config.rounds || e.round != s.config.rounds)
    corrupt(e, "game-over before the final round completed");
  if (e.payload.contains("scores")) {
    for (const PlayerState& p : s.players) {
      const auto& scores = e.payload.at("scores");
      if (!scores.contains(p.id) || scores.at(p.id) != p.score) corrupt(e, "final scores disagree with state");
    }
  }
  s.phase = Phase::Finished;
}

GameState replay(const EventLog& log) {
  if (log.empty()) throw CorruptionError(0, "empty event log");
  Replayer r;
  for (const Event& e : log) r.apply(e);
  return r.state();
}

}  // namespace normgame
