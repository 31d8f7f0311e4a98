#include "normgame/analytics/metrics.hpp"

#include <map>

#include "normgame/replay.hpp"

namespace normgame::analytics {

namespace {

struct OpenLoss {
  int lost_at = 0;
  int deadline = 0;
};

struct Tally {
  std::map<Color, OpenLoss> open;
  int losses = 0;
  int repaired_in_time = 0;
  int skipped = 0;
  int peer_sanctions = 0;
  int tasks = 0;
  int censored = 0;
  std::vector<int> recovery_rounds;

  void regain(Color c, int round, bool by_task) {
    auto it = open.find(c);
    if (it == open.end()) return;
    recovery_rounds.push_back(round - it->second.lost_at);
    if (by_task && round <= it->second.deadline) ++repaired_in_time;
    open.erase(it);
  }
};

std::optional<double> ratio(double num, double den, double scale = 1.0) {
  if (den == 0.0) return std::nullopt;
  return scale * num / den;
}

}  // namespace

std::vector<MetricsRecord> compute_metrics(const EventLog& log) {
  Replayer replayer;
  std::vector<Tally> tallies;
  int attacks = 0;
  int issuances = 0;

  for (const Event& e : log) {
    std::optional<GameState> before;
    if (replayer.has_game()) before = replayer.state();
    replayer.apply(e);
    const GameState& after = replayer.state();
    if (e.kind == EventKind::GameCreated) {
      tallies.assign(after.players.size(), Tally{});
      continue;
    }
    auto player_of = [&](const char* key) { return after.index_of_player(e.payload.at(key).get<std::string>()); };

    switch (e.kind) {
      case EventKind::Attack: {
        ++attacks;
        const std::size_t i = player_of("player");
        for (Color c : kColors) {
          const ImmunitySlot& was = before->players[i].slot(c);
          const ImmunitySlot& now = after.players[i].slot(c);
          if (was.held() && !now.held()) {
            tallies[i].open[c] = OpenLoss{now.loss->lost_at_round, now.loss->deadline_round};
            ++tallies[i].losses;
          }
        }
        break;
      }
      case EventKind::ActionApplied:
      case EventKind::ActionRejected: {
        const std::size_t i = player_of("player");
        if (is_sanctioned(before->players[i].sanction)) ++tallies[i].skipped;
        if (e.kind == EventKind::ActionRejected) break;
        const Action a = action_from_json(e.payload.at("action"));
        if (const auto* t = std::get_if<CompleteImmunityTask>(&a)) tallies[i].regain(t->color, e.round, true);
        else if (std::holds_alternative<CompleteProjectTask>(a)) ++tallies[i].tasks;
        else if (std::holds_alternative<PeerSanction>(a)) ++tallies[i].peer_sanctions;
        break;
      }
      case EventKind::SanctionLifted: {
        const std::size_t i = player_of("player");
        for (Color c : color_set_from_json(e.payload.at("restored")).to_vector())
          tallies[i].regain(c, e.round, false);
        break;
      }
      case EventKind::ManagerSanctioned: ++issuances; break;
      default: break;
    }
  }
  if (!replayer.has_game()) throw CorruptionError(0, "empty event log");

  const GameState& final_state = replayer.state();
  const int last_round = final_state.phase == Phase::Finished ? final_state.config.rounds : final_state.round;
  std::vector<MetricsRecord> out;
  for (std::size_t i = 0; i < final_state.players.size(); ++i) {
    Tally& t = tallies[i];
    for (const auto& [color, loss] : t.open) {
      (void)color;
      t.recovery_rounds.push_back(last_round - loss.lost_at);
      ++t.censored;
    }
    const PlayerState& p = final_state.players[i];
    MetricsRecord r;
    r.game_id = final_state.game_id;
    r.player_id = p.id;
    r.regime = final_state.config.regime;
    r.risk_score = p.risk_score;
    r.immunity_loss_count = t.losses;
    r.immunity_repaired_before_deadline_count = t.repaired_in_time;
    r.compliance_rate = ratio(t.repaired_in_time, t.losses);
    r.manager_sanction_issuances = issuances;
    r.attacks_in_game = attacks;
    r.sanctions_per_100_attacks = ratio(issuances, attacks, 100.0);
    r.score = p.score;
    r.rounds_skipped = t.skipped;
    if (!t.recovery_rounds.empty()) {
      double sum = 0.0;
      for (int x : t.recovery_rounds) sum += x;
      r.resilience_mean_rounds = sum / static_cast<double>(t.recovery_rounds.size());
    }
    r.censored_loss_count = t.censored;
    r.peer_sanctions_issued = t.peer_sanctions;
    r.project_tasks_completed = t.tasks;
    r.score_per_task = ratio(p.score, t.tasks);
    out.push_back(std::move(r));
  }
  return out;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> kNames{
      "complianceRate",        "sanctionsPer100Attacks", "score",
      "roundsSkipped",         "resilienceMeanRounds",   "immunityLossCount",
      "immunityRepairedBeforeDeadlineCount", "managerSanctionIssuances", "attacksInGame",
      "peerSanctionsIssued",   "projectTasksCompleted",  "scorePerTask",
      "censoredLossCount",     "riskScore"};
  return kNames;
}

std::optional<double> metric_value(const MetricsRecord& r, std::string_view m) {
  if (m == "complianceRate") return r.compliance_rate;
  if (m == "sanctionsPer100Attacks") return r.sanctions_per_100_attacks;
  if (m == "score") return r.score;
  if (m == "roundsSkipped") return r.rounds_skipped;
  if (m == "resilienceMeanRounds") return r.resilience_mean_rounds;
  if (m == "immunityLossCount") return r.immunity_loss_count;
  if (m == "immunityRepairedBeforeDeadlineCount") return r.immunity_repaired_before_deadline_count;
  if (m == "managerSanctionIssuances") return r.manager_sanction_issuances;
  if (m == "attacksInGame") return r.attacks_in_game;
  if (m == "peerSanctionsIssued") return r.peer_sanctions_issued;
  if (m == "projectTasksCompleted") return r.project_tasks_completed;
  if (m == "scorePerTask") return r.score_per_task;
  if (m == "censoredLossCount") return r.censored_loss_count;
  if (m == "riskScore") return r.risk_score;
  throw InputError("unknown metric '" + std::string(m) + "'");
}

}  // namespace normgame::analytics
