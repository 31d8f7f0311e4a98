#include "normgame/experiment/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "normgame/analytics/compare.hpp"
#include "normgame/analytics/metrics_csv.hpp"
#include "normgame/engine.hpp"
#include "normgame/rng.hpp"

namespace normgame::experiment {

namespace {

namespace fs = std::filesystem;
using analytics::MetricsRecord;

constexpr std::uint64_t kScheduleStream = 0x5C4ED;

template <class T>
T get(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("experiment spec field '{}': {}", key, e.what()));
  }
}

Json try_compare(const std::vector<MetricsRecord>& a, const std::vector<MetricsRecord>& b, const std::string& metric) {
  try {
    return analytics::to_json(analytics::compare(a, b, metric));
  } catch (const Error& e) {
    Json j;
    j["metric"] = metric;
    j["error"] = e.what();
    return j;
  }
}

Json try_test(const std::string& metric, const std::vector<double>& a, const std::vector<double>& b,
              const std::vector<std::string>& exclusions) {
  Json j;
  j["metric"] = metric;
  j["pairs"] = a.size();
  try {
    if (a.size() < 2) throw InputError("fewer than two usable pairs");
    const auto r = analytics::test_pairs(a, b);
    j["mean_a"] = analytics::mean(a);
    j["mean_b"] = analytics::mean(b);
    j["t"] = r.t_statistic;
    j["df"] = r.degrees_of_freedom;
    j["p_two_tailed"] = r.p_two_tailed;
    j["hedges_g"] = r.hedges_g;
    j["effect"] = std::string(analytics::to_string(r.effect));
  } catch (const Error& e) {
    j["error"] = e.what();
  }
  j["exclusions"] = exclusions;
  return j;
}

// Per participant: complianceRate in the second game under `regime` minus the first.
std::map<std::string, double> learning_deltas(const std::vector<MetricsRecord>& records, Regime regime) {
  std::map<std::string, std::map<int, double>> by_player;
  for (const auto& r : records)
    if (r.regime == regime && r.compliance_rate && r.regime_ordinal > 0)
      by_player[r.player_id][r.regime_ordinal] = *r.compliance_rate;
  std::map<std::string, double> out;
  for (const auto& [id, games] : by_player)
    if (games.contains(1) && games.contains(2)) out[id] = games.at(2) - games.at(1);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "': " + ec.message());
}

}  // namespace

agents::PolicySpec PolicyAssignment::for_participant(int index) const {
  if (auto it = overrides.find(index); it != overrides.end()) return it->second;
  if (!cycle.empty()) return cycle[static_cast<std::size_t>(index) % cycle.size()];
  return fallback;
}

void ExperimentSpec::validate() const {
  if (name.empty() || name.find_first_of(",/\\ \n") != std::string::npos)
    throw ConfigError("experiment name must be nonempty without commas, slashes or spaces");
  if (cohort_size < 2) throw ConfigError("cohort_size must be at least 2");
  if (group_size < 2 || group_size > 5) throw ConfigError("group_size must be in [2,5]");
  if (schedule.empty()) throw ConfigError("games_per_participant must be nonempty");
  if (!risk_scores.empty() && static_cast<int>(risk_scores.size()) != cohort_size)
    throw ConfigError("risk_scores must have one entry per participant");
  policies.fallback.validate();
  for (const auto& p : policies.cycle) p.validate();
  for (const auto& [i, p] : policies.overrides) {
    if (i < 0 || i >= cohort_size) throw ConfigError(fmt::format("policy override for unknown participant {}", i));
    p.validate();
  }
  GameConfig probe = game;
  probe.player_count = group_size;
  probe.validate();
  form_groups(*this);
}

ExperimentSpec spec_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("experiment spec must be a JSON object");
  static const std::set<std::string> kKnown{"name",          "cohort_size", "group_size",   "games_per_participant",
                                            "shuffle_schedule", "policy_assignment", "risk_scores", "base_seed",
                                            "output_dir",    "game_config"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kKnown.contains(it.key())) throw ConfigError("unknown experiment spec key '" + it.key() + "'");

  ExperimentSpec s;
  if (j.contains("name")) s.name = get<std::string>(j, "name");
  if (j.contains("cohort_size")) s.cohort_size = get<int>(j, "cohort_size");
  if (j.contains("group_size")) s.group_size = get<int>(j, "group_size");
  if (j.contains("games_per_participant")) {
    s.schedule.clear();
    for (const auto& r : get<std::vector<std::string>>(j, "games_per_participant")) {
      auto regime = parse_regime(r);
      if (!regime) throw ConfigError("unknown regime '" + r + "' in games_per_participant");
      s.schedule.push_back(*regime);
    }
  }
  if (j.contains("shuffle_schedule")) s.shuffle_schedule = get<bool>(j, "shuffle_schedule");
  if (j.contains("risk_scores")) s.risk_scores = get<std::vector<double>>(j, "risk_scores");
  if (j.contains("base_seed")) s.base_seed = get<std::uint64_t>(j, "base_seed");
  if (j.contains("output_dir")) s.output_dir = get<std::string>(j, "output_dir");
  if (j.contains("game_config")) {
    Json g = j.at("game_config");
    if (!g.is_object()) throw ConfigError("game_config must be an object");
    // Per-game fields are owned by the schedule.
    for (const char* k : {"regime", "seed", "player_count"})
      if (g.contains(k)) throw ConfigError(fmt::format("game_config.{} is set per game by the schedule", k));
    g["player_count"] = s.group_size >= 2 && s.group_size <= 5 ? s.group_size : 2;
    s.game = config_from_json(g);
  }
  if (j.contains("policy_assignment")) {
    const Json& pa = j.at("policy_assignment");
    if (!pa.is_object()) throw ConfigError("policy_assignment must be an object");
    for (auto it = pa.begin(); it != pa.end(); ++it) {
      if (it.key() == "default") s.policies.fallback = agents::policy_from_json(it.value());
      else if (it.key() == "cycle") {
        if (!it.value().is_array()) throw ConfigError("policy_assignment.cycle must be an array");
        for (const Json& p : it.value()) s.policies.cycle.push_back(agents::policy_from_json(p));
      } else if (it.key() == "overrides") {
        if (!it.value().is_object()) throw ConfigError("policy_assignment.overrides must be an object");
        for (auto o = it.value().begin(); o != it.value().end(); ++o) {
          int index = 0;
          try {
            std::size_t used = 0;
            index = std::stoi(o.key(), &used);
            if (used != o.key().size()) throw std::invalid_argument("trailing");
          } catch (const std::exception&) {
            throw ConfigError("policy override key must be a participant index, got '" + o.key() + "'");
          }
          s.policies.overrides[index] = agents::policy_from_json(o.value());
        }
      } else {
        throw ConfigError("unknown policy_assignment key '" + it.key() + "'");
      }
    }
  }
  s.validate();
  return s;
}

ExperimentSpec read_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open experiment spec '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return spec_from_json(j);
}

std::string participant_id(const ExperimentSpec& spec, int index) { return fmt::format("{}.p{:03}", spec.name, index); }

double participant_risk(const ExperimentSpec& spec, int index) {
  if (!spec.risk_scores.empty()) return spec.risk_scores[static_cast<std::size_t>(index)];
  const auto policy = spec.policies.for_participant(index);
  return policy.kind == agents::PolicyKind::RiskWeighted ? policy.theta : 0.5;
}

std::vector<std::vector<int>> form_groups(const ExperimentSpec& spec) {
  std::vector<std::vector<int>> groups;
  for (int start = 0; start < spec.cohort_size; start += spec.group_size) {
    std::vector<int> g;
    for (int i = start; i < std::min(spec.cohort_size, start + spec.group_size); ++i) g.push_back(i);
    if (g.size() < 2)
      throw ConfigError(fmt::format("cohort of {} leaves participant {} without a group of size {}", spec.cohort_size,
                                    g.front(), spec.group_size));
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<ScheduledGame> schedule_games(const ExperimentSpec& spec) {
  std::vector<ScheduledGame> out;
  const auto groups = form_groups(spec);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<Regime> order = spec.schedule;
    if (spec.shuffle_schedule) {
      Rng rng = Rng::derive(spec.base_seed, {kScheduleStream, g});
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }
    std::map<Regime, int> seen;
    for (std::size_t k = 0; k < order.size(); ++k) {
      ScheduledGame sg;
      sg.group = static_cast<int>(g);
      sg.game_index = static_cast<int>(k);
      sg.regime = order[k];
      sg.regime_ordinal = ++seen[order[k]];
      sg.participants = groups[g];
      sg.seed = stable_hash(spec.base_seed, {static_cast<std::uint64_t>(groups[g].front()), k});
      sg.game_id = fmt::format("{}-g{:02}-{}", spec.name, g, k);
      out.push_back(std::move(sg));
    }
  }
  return out;
}

GameOutcome play_scheduled_game(const ExperimentSpec& spec, const ScheduledGame& game) {
  GameConfig config = spec.game;
  config.regime = game.regime;
  config.player_count = static_cast<int>(game.participants.size());
  config.seed = game.seed;

  RunOptions options;
  options.game_id = game.game_id;
  std::vector<std::unique_ptr<agents::BotSource>> bots;
  std::vector<ActionSource*> sources;
  for (int p : game.participants) {
    const PlayerId id = participant_id(spec, p);
    options.players.push_back(PlayerSeed{id, participant_risk(spec, p)});
    bots.push_back(std::make_unique<agents::BotSource>(spec.policies.for_participant(p), game.seed, id));
    sources.push_back(bots.back().get());
  }
  GameOutcome outcome;
  outcome.game = game;
  outcome.log = run_game(config, sources, game.seed, options);
  outcome.metrics = analytics::compute_metrics(outcome.log);
  for (auto& r : outcome.metrics) r.regime_ordinal = game.regime_ordinal;
  return outcome;
}

Artifacts run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.output_dir.empty()) throw ConfigError("experiment needs an output directory");
  const fs::path logs_dir = spec.output_dir / "logs";
  std::error_code ec;
  fs::create_directories(logs_dir, ec);
  if (ec) throw IoError("cannot create '" + logs_dir.string() + "': " + ec.message());

  const auto games = schedule_games(spec);
  std::vector<GameOutcome> outcomes(games.size());
  std::vector<std::string> failures(games.size());

  // Groups are independent; a group's games run in schedule order.
  std::map<int, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < games.size(); ++i) by_group[games[i].group].push_back(i);
  std::vector<std::vector<std::size_t>> work;
  for (auto& [g, idx] : by_group) work.push_back(idx);

  const unsigned workers = std::max(1U, std::min<unsigned>(std::thread::hardware_concurrency(), work.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t w = next++; w < work.size(); w = next++) {
      for (std::size_t i : work[w]) {
        try {
          outcomes[i] = play_scheduled_game(spec, games[i]);
          write_event_log(logs_dir / (games[i].game_id + ".jsonl"), outcomes[i].log);
        } catch (const std::exception& e) {
          failures[i] = e.what();
        }
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t i = 0; i < games.size(); ++i)
    if (!failures[i].empty()) throw Error(fmt::format("game {} failed: {}", games[i].game_id, failures[i]));

  Artifacts out;
  std::vector<MetricsRecord> records;
  for (const auto& o : outcomes) {
    out.logs.push_back(logs_dir / (o.game.game_id + ".jsonl"));
    records.insert(records.end(), o.metrics.begin(), o.metrics.end());
  }
  out.metrics_csv = spec.output_dir / "metrics.csv";
  analytics::write_metrics_csv(out.metrics_csv, records);

  Json report = comparison_report(records, Regime::Individual, Regime::Group);
  report["experiment"] = spec.name;
  report["games"] = games.size();
  out.report_json = spec.output_dir / "report.json";
  out.report_text = spec.output_dir / "report.txt";
  write_text(out.report_json, report.dump(2) + "\n");
  write_text(out.report_text, render_report(report));
  return out;
}

Json comparison_report(const std::vector<MetricsRecord>& records, Regime a, Regime b,
                       const std::vector<std::string>& metrics) {
  std::vector<MetricsRecord> ra, rb;
  for (const auto& r : records) {
    if (r.regime == a) ra.push_back(r);
    else if (r.regime == b) rb.push_back(r);
  }
  std::set<std::string> participants;
  for (const auto& r : records) participants.insert(r.player_id);

  Json report;
  report["schema"] = "normgame-report/1";
  report["group_a"] = std::string(to_string(a));
  report["group_b"] = std::string(to_string(b));
  report["records"] = records.size();
  report["participants"] = participants.size();

  Json totals;
  for (Regime regime : {a, b}) {
    std::set<std::string> games;
    std::int64_t skipped = 0, issuances = 0, attacks = 0;
    for (const auto& r : records) {
      if (r.regime != regime) continue;
      skipped += r.rounds_skipped;
      if (games.insert(r.game_id).second) {
        issuances += r.manager_sanction_issuances;
        attacks += r.attacks_in_game;
      }
    }
    Json t;
    t["games"] = games.size();
    t["rounds_skipped"] = skipped;
    t["manager_sanction_issuances"] = issuances;
    t["attacks"] = attacks;
    totals[std::string(to_string(regime))] = t;
  }
  report["totals"] = totals;

  Json comparisons = Json::array();
  for (const auto& m : metrics) comparisons.push_back(try_compare(ra, rb, m));
  report["comparisons"] = comparisons;

  {
    const auto da = learning_deltas(records, a);
    const auto db = learning_deltas(records, b);
    std::vector<double> xs, ys;
    std::vector<std::string> excluded;
    for (const auto& id : participants) {
      if (da.contains(id) && db.contains(id)) {
        xs.push_back(da.at(id));
        ys.push_back(db.at(id));
      } else {
        excluded.push_back(id);
      }
    }
    report["learning_effect"] = try_test("complianceRateSecondMinusFirst", xs, ys, excluded);
  }

  {
    std::map<std::string, double> risk;
    for (const auto& r : records) risk.emplace(r.player_id, r.risk_score);
    Json by_class = Json::object();
    if (risk.size() >= 2) {
      std::vector<double> scores;
      for (const auto& [id, s] : risk) scores.push_back(s);
      const auto classes = analytics::classify_risk(scores);
      std::map<std::string, analytics::RiskClass> cls;
      std::size_t k = 0;
      for (const auto& [id, s] : risk) cls[id] = classes[k++];
      for (auto c : {analytics::RiskClass::RiskSeeking, analytics::RiskClass::RiskAverse}) {
        std::vector<MetricsRecord> ca, cb;
        for (const auto& r : ra)
          if (cls.at(r.player_id) == c) ca.push_back(r);
        for (const auto& r : rb)
          if (cls.at(r.player_id) == c) cb.push_back(r);
        Json list = Json::array();
        for (const char* m : {"complianceRate", "resilienceMeanRounds"}) list.push_back(try_compare(ca, cb, m));
        by_class[std::string(analytics::to_string(c))] = list;
      }
    }
    report["by_risk_class"] = by_class;
  }
  return report;
}

std::string render_report(const Json& report) {
  std::ostringstream o;
  const auto a = report.at("group_a").get<std::string>();
  const auto b = report.at("group_b").get<std::string>();
  o << fmt::format("{} vs {}: {} records, {} participants\n\n", a, b, report.at("records").get<std::size_t>(),
                   report.at("participants").get<std::size_t>());
  o << fmt::format("{:<34} {:>10} {:>10} {:>6} {:>9} {:>8} {:>8} {:>10}\n", "metric", "mean_" + a.substr(0, 5),
                   "mean_" + b.substr(0, 5), "pairs", "t", "p", "g", "effect");
  auto row = [&](const Json& c) {
    const auto metric = c.at("metric").get<std::string>();
    if (c.contains("error")) {
      o << fmt::format("{:<34} {}\n", metric, c.at("error").get<std::string>());
      return;
    }
    o << fmt::format("{:<34} {:>10.3f} {:>10.3f} {:>6} {:>9.3f} {:>8.4f} {:>8.3f} {:>10}\n", metric,
                     c.at("mean_a").get<double>(), c.at("mean_b").get<double>(), c.at("pairs").get<std::size_t>(),
                     c.at("t").get<double>(), c.at("p_two_tailed").get<double>(), c.at("hedges_g").get<double>(),
                     c.at("effect").get<std::string>());
  };
  for (const auto& c : report.at("comparisons")) row(c);
  if (report.contains("learning_effect")) row(report.at("learning_effect"));
  if (report.contains("by_risk_class")) {
    for (auto it = report.at("by_risk_class").begin(); it != report.at("by_risk_class").end(); ++it) {
      o << "\n" << it.key() << ":\n";
      for (const auto& c : it.value()) row(c);
    }
  }
  if (report.contains("totals")) {
    o << "\n";
    for (auto it = report.at("totals").begin(); it != report.at("totals").end(); ++it)
      o << fmt::format("{}: {} games, {} rounds skipped, {} manager sanctions, {} attacks\n", it.key(),
                       it.value().at("games").get<std::size_t>(), it.value().at("rounds_skipped").get<std::int64_t>(),
                       it.value().at("manager_sanction_issuances").get<std::int64_t>(),
                       it.value().at("attacks").get<std::int64_t>());
  }
  return o.str();
}

}  // namespace normgame::experiment
