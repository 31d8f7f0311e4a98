#include "normgame/engine.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "normgame/rng.hpp"
#include "normgame/rules.hpp"

namespace normgame {

namespace {

std::uint64_t u(Stream s) { return static_cast<std::uint64_t>(s); }

void emit(GameState& state, std::vector<Event>& out, EventKind kind, Json payload) {
  out.push_back(Event{state.game_id, state.round, state.next_seq++, kind, std::move(payload)});
}

void require_open_phase(const GameState& state) {
  if (state.phase == Phase::Finished) throw LifecycleError("game " + state.game_id + " is finished");
}

Json projects_json(const PlayerState& p) {
  Json j;
  for (const Project& pr : p.projects) j[std::string(to_string(pr.size))] = to_json(pr.required);
  return j;
}

const char* effect_name(const ImmunitySlot& before, const ImmunitySlot& after) {
  if (before.held() && !after.held()) return "immunity_lost";
  if (before.capability_available && !after.capability_available) return "capability_lost";
  return "none";
}

}  // namespace

std::size_t GameState::index_of_player(const PlayerId& id) const {
  for (std::size_t i = 0; i < players.size(); ++i)
    if (players[i].id == id) return i;
  throw NotFound("unknown player '" + id + "'");
}

std::vector<PlayerSeed> default_player_seeds(std::span<const double> risk_scores) {
  std::vector<PlayerSeed> out;
  for (std::size_t i = 0; i < risk_scores.size(); ++i)
    out.push_back(PlayerSeed{fmt::format("P{}", i + 1), risk_scores[i]});
  return out;
}

Step create_game(const GameConfig& config, std::span<const PlayerSeed> seeds, std::string game_id) {
  config.validate();
  if (static_cast<int>(seeds.size()) != config.player_count)
    throw ConfigError(fmt::format("expected {} players, got {}", config.player_count, seeds.size()));
  if (game_id.empty()) throw ConfigError("game id must be nonempty");

  Step step;
  GameState& s = step.state;
  s.config = config;
  s.game_id = std::move(game_id);
  s.rng_seed = config.seed;
  Json players = Json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (seeds[i].id.empty()) throw ConfigError("player id must be nonempty");
    for (std::size_t k = 0; k < i; ++k)
      if (seeds[k].id == seeds[i].id) throw ConfigError("duplicate player id '" + seeds[i].id + "'");
    PlayerState p;
    p.id = seeds[i].id;
    p.risk_score = seeds[i].risk_score;
    for (ProjectSize size : kProjectSizes) {
      Rng rng = Rng::derive(s.rng_seed, {u(Stream::InitialProjects), i, index_of(size)});
      p.project(size).required = roll_required_tasks(config.tasks_for(size), rng);
    }
    Json pj;
    pj["id"] = p.id;
    pj["risk_score"] = p.risk_score;
    pj["projects"] = projects_json(p);
    players.push_back(pj);
    s.players.push_back(std::move(p));
  }
  Json payload;
  payload["config"] = to_json(config);
  payload["players"] = players;
  const int first_round = s.round;
  s.round = 0;
  emit(s, step.events, EventKind::GameCreated, payload);
  s.round = first_round;
  return step;
}

GameState new_game(const GameConfig& config, std::span<const double> risk_scores) {
  auto seeds = default_player_seeds(risk_scores);
  return create_game(config, seeds).state;
}

Step begin_round(GameState state) {
  require_open_phase(state);
  if (state.round_open) throw LifecycleError(fmt::format("round {} already begun", state.round));
  Step step;
  auto& events = step.events;
  emit(state, events, EventKind::RoundStarted, Json::object());

  for (PlayerState& p : state.players) {
    if (auto* m = std::get_if<ManagerSanction>(&p.sanction)) {
      if (--m->rounds_remaining == 0) {
        const ColorSet restore = m->restore;
        for (Color c : restore.to_vector()) {
          p.slot(c).loss.reset();
          p.slot(c).capability_available = true;
        }
        p.sanction = NoSanction{};
        Json j;
        j["player"] = p.id;
        j["sanction"] = "manager";
        j["restored"] = to_json(restore);
        emit(state, events, EventKind::SanctionLifted, j);
      }
    } else if (auto* ps = std::get_if<PeerSanctionStatus>(&p.sanction)) {
      if (--ps->rounds_remaining == 0) {
        p.sanction = NoSanction{};
        Json j;
        j["player"] = p.id;
        j["sanction"] = "peer";
        j["restored"] = Json::array();
        emit(state, events, EventKind::SanctionLifted, j);
      }
    }
  }

  for (const PendingPeerSanction& pending : state.pending_peer_sanctions) {
    PlayerState& target = state.players[state.index_of_player(pending.target)];
    if (!is_sanctioned(target.sanction))
      target.sanction = PeerSanctionStatus{state.config.peer_sanction_duration};
  }
  state.pending_peer_sanctions.clear();

  for (std::size_t i = 0; i < state.players.size(); ++i) {
    Rng rng = Rng::derive(state.rng_seed, {u(Stream::Observation), static_cast<std::uint64_t>(state.round), i});
    if (!(rng.uniform01() < state.config.manager_observability)) continue;
    PlayerState& violator = state.players[i];
    const ColorSet overdue = overdue_colors(violator, state.round);
    Json obs;
    obs["player"] = violator.id;
    obs["compliant"] = overdue.empty();
    obs["overdue"] = to_json(overdue);
    emit(state, events, EventKind::ManagerObserved, obs);
    if (overdue.empty() || is_manager_sanctioned(violator.sanction)) continue;

    const int duration = state.config.sanction_rounds_per_violation * static_cast<int>(overdue.size());
    Json targets = Json::array();
    if (state.config.regime == Regime::Individual) {
      violator.sanction = ManagerSanction{duration, overdue, false};
      targets.push_back(violator.id);
    } else {
      for (std::size_t k = 0; k < state.players.size(); ++k) {
        PlayerState& p = state.players[k];
        if (k == i) p.sanction = ManagerSanction{duration, overdue, false};
        else if (!is_manager_sanctioned(p.sanction)) p.sanction = ManagerSanction{duration, {}, true};
        else continue;
        targets.push_back(p.id);
      }
    }
    ++state.manager_sanction_issuances;
    Json j;
    j["violator"] = violator.id;
    j["regime"] = std::string(to_string(state.config.regime));
    j["duration"] = duration;
    j["colors"] = to_json(overdue);
    j["targets"] = targets;
    emit(state, events, EventKind::ManagerSanctioned, j);
  }

  state.round_open = true;
  step.state = std::move(state);
  return step;
}

Step submit_round(GameState state, const ActionMap& actions, const std::set<PlayerId>& timed_out) {
  require_open_phase(state);
  if (!state.round_open)
    throw LifecycleError(fmt::format("round {} has not begun", state.round));
  for (const auto& [id, action] : actions) {
    (void)action;
    if (std::none_of(state.players.begin(), state.players.end(),
                     [&](const PlayerState& p) { return p.id == id; }))
      throw ProtocolError("action for unknown player '" + id + "'");
  }
  for (const PlayerState& p : state.players)
    if (!actions.contains(p.id)) throw ProtocolError("missing action for player '" + p.id + "'");
  for (const PlayerId& id : timed_out) state.index_of_player(id);

  Step step;
  auto& events = step.events;
  const int round = state.round;
  // Peer compliance is judged on what every player saw in their view.
  const std::vector<PlayerState> observed = state.players;

  for (std::size_t i = 0; i < state.players.size(); ++i) {
    const Action& action = actions.at(state.players[i].id);
    Json submitted;
    submitted["player"] = state.players[i].id;
    submitted["action"] = to_json(action);
    emit(state, events, EventKind::ActionSubmitted, submitted);

    std::optional<std::string> reason;
    if (timed_out.contains(state.players[i].id)) reason = "timeout";
    else reason = rejection_reason(state.players[i], observed, action, round);
    if (reason) {
      Json j = submitted;
      j["reason"] = *reason;
      emit(state, events, EventKind::ActionRejected, j);
      continue;
    }

    PlayerState& p = state.players[i];
    std::optional<Json> banked;
    if (const auto* t = std::get_if<CompleteProjectTask>(&action)) {
      Rng rng = Rng::derive(state.rng_seed, {u(Stream::ProjectReroll), static_cast<std::uint64_t>(round), i});
      const bool completes = p.project(t->size).remaining() == ColorSet{t->color};
      auto result = apply_project_task(p, t->size, t->color, rng, state.config);
      p = std::move(result.player);
      if (completes) {
        Json b;
        b["player"] = p.id;
        b["size"] = std::string(to_string(t->size));
        b["points"] = result.banked_points;
        b["next_required"] = to_json(p.project(t->size).required);
        banked = b;
      }
    } else if (const auto* t = std::get_if<CompleteImmunityTask>(&action)) {
      p = apply_immunity_task(p, t->color, round);
    } else if (const auto* t = std::get_if<PeerSanction>(&action)) {
      state.pending_peer_sanctions.push_back(PendingPeerSanction{p.id, t->target});
    }
    emit(state, events, EventKind::ActionApplied, submitted);
    if (banked) emit(state, events, EventKind::ProjectBanked, *banked);
  }

  for (std::size_t i = 0; i < state.players.size(); ++i) {
    Rng rng = Rng::derive(state.rng_seed, {u(Stream::Attack), static_cast<std::uint64_t>(round), i});
    auto kind = sample_attack(rng, state.config);
    if (!kind) continue;
    PlayerState& p = state.players[i];
    const PlayerState before = p;
    p = apply_attack(p, *kind, round, state.config);
    ++state.attack_count;
    Json effects;
    for (Color c : affected_colors(*kind).to_vector())
      effects[std::string(to_string(c))] = effect_name(before.slot(c), p.slot(c));
    Json j;
    j["player"] = p.id;
    j["kind"] = std::string(to_string(*kind));
    j["effects"] = effects;
    emit(state, events, EventKind::Attack, j);
  }

  state.round_open = false;
  if (state.round >= state.config.rounds) {
    state.phase = Phase::Finished;
    Json scores;
    for (const PlayerState& p : state.players) scores[p.id] = p.score;
    Json j;
    j["scores"] = scores;
    j["attack_count"] = state.attack_count;
    j["manager_sanction_issuances"] = state.manager_sanction_issuances;
    emit(state, events, EventKind::GameOver, j);
  } else {
    ++state.round;
  }
  step.state = std::move(state);
  return step;
}

PlayerView player_view(const GameState& state, const PlayerId& id) {
  const std::size_t me = state.index_of_player(id);
  PlayerView v;
  v.self = state.players[me];
  v.round = state.round;
  v.forced_skip = is_sanctioned(v.self.sanction);
  v.rules = PublicRules{state.config.rounds, state.config.immunity_deadline, state.config.project_scores,
                        state.config.regime};
  for (std::size_t i = 0; i < state.players.size(); ++i) {
    if (i == me) continue;
    const PlayerState& p = state.players[i];
    PeerView peer;
    peer.id = p.id;
    peer.score = p.score;
    peer.compliance = compliance_status(p, state.round);
    for (Color c : kColors) peer.immunity_held[index_of(c)] = p.slot(c).held();
    peer.sanctioned = is_sanctioned(p.sanction);
    v.peers.push_back(std::move(peer));
  }
  return v;
}

Json to_json(const PlayerView& v) {
  Json j;
  j["round"] = v.round;
  j["forced_skip"] = v.forced_skip;
  Json rules;
  rules["rounds"] = v.rules.rounds;
  rules["immunity_deadline"] = v.rules.immunity_deadline;
  Json scores;
  for (ProjectSize s : kProjectSizes) scores[std::string(to_string(s))] = v.rules.project_scores[index_of(s)];
  rules["project_scores"] = scores;
  rules["regime"] = std::string(to_string(v.rules.regime));
  j["rules"] = rules;
  j["self"] = to_json(v.self);
  j["self"]["compliance"] =
      compliance_status(v.self, v.round) == Compliance::Compliant ? "compliant" : "noncompliant";
  Json peers = Json::array();
  for (const PeerView& p : v.peers) {
    Json e;
    e["id"] = p.id;
    e["score"] = p.score;
    e["compliance"] = p.compliance == Compliance::Compliant ? "compliant" : "noncompliant";
    Json held;
    for (Color c : kColors) held[std::string(to_string(c))] = p.immunity_held[index_of(c)];
    e["immunity_held"] = held;
    e["sanctioned"] = p.sanctioned;
    peers.push_back(e);
  }
  j["peers"] = peers;
  return j;
}

Json to_json(const GameState& s) {
  Json j;
  j["game_id"] = s.game_id;
  j["round"] = s.round;
  j["round_open"] = s.round_open;
  j["phase"] = s.phase == Phase::Finished ? "finished" : "awaiting-actions";
  j["rng_seed"] = s.rng_seed;
  j["attack_count"] = s.attack_count;
  j["manager_sanction_issuances"] = s.manager_sanction_issuances;
  j["next_seq"] = s.next_seq;
  Json pending = Json::array();
  for (const auto& p : s.pending_peer_sanctions) {
    Json e;
    e["issuer"] = p.issuer;
    e["target"] = p.target;
    pending.push_back(e);
  }
  j["pending_peer_sanctions"] = pending;
  j["config"] = to_json(s.config);
  Json players = Json::array();
  for (const PlayerState& p : s.players) players.push_back(to_json(p));
  j["players"] = players;
  return j;
}

EventLog run_game(GameConfig config, std::span<ActionSource* const> sources, std::uint64_t seed,
                  const RunOptions& options) {
  config.seed = seed;
  std::vector<PlayerSeed> seeds = options.players;
  if (seeds.empty()) seeds = default_player_seeds(std::vector<double>(config.player_count, 0.0));
  if (sources.size() != seeds.size())
    throw ConfigError(fmt::format("expected {} action sources, got {}", seeds.size(), sources.size()));

  Step step = create_game(config, seeds, options.game_id);
  EventLog log = std::move(step.events);
  GameState state = std::move(step.state);
  auto append = [&](Step&& s) {
    state = std::move(s.state);
    log.insert(log.end(), std::make_move_iterator(s.events.begin()), std::make_move_iterator(s.events.end()));
  };

  while (state.phase != Phase::Finished) {
    append(begin_round(std::move(state)));
    ActionMap actions;
    for (std::size_t i = 0; i < state.players.size(); ++i) {
      const PlayerId& id = state.players[i].id;
      try {
        actions.emplace(id, sources[i]->decide(player_view(state, id)));
      } catch (const std::exception& e) {
        throw AbortedGame(fmt::format("action source for {} failed in round {}: {}", id, state.round, e.what()),
                          std::move(log));
      }
    }
    append(submit_round(std::move(state), actions));
  }
  return log;
}

}  // namespace normgame
