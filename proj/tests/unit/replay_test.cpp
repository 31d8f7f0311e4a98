#include <gtest/gtest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "normgame/agents/policy.hpp"
#include "normgame/error.hpp"
#include "normgame/replay.hpp"

using namespace normgame;
using namespace normgame::testing;

namespace {

struct LiveRun {
  EventLog log;
  // State after each round closes, indexed by the number of events so far.
  std::vector<std::pair<std::size_t, GameState>> checkpoints;
  GameState final_state;
};

LiveRun live(const GameConfig& cfg, const std::vector<agents::PolicySpec>& specs, std::uint64_t seed) {
  GameConfig c = cfg;
  c.seed = seed;
  LiveRun run;
  Step step = create_game(c, default_player_seeds(std::vector<double>(specs.size(), 0.3)), "g");
  GameState s = step.state;
  run.log = step.events;
  while (s.phase != Phase::Finished) {
    step = begin_round(s);
    s = step.state;
    run.log.insert(run.log.end(), step.events.begin(), step.events.end());
    run.checkpoints.emplace_back(run.log.size(), s);
    ActionMap m;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      agents::BotSource bot(specs[i], seed, s.players[i].id);
      m[s.players[i].id] = bot.decide(player_view(s, s.players[i].id));
    }
    step = submit_round(s, m);
    s = step.state;
    run.log.insert(run.log.end(), step.events.begin(), step.events.end());
    run.checkpoints.emplace_back(run.log.size(), s);
  }
  run.final_state = s;
  return run;
}

const std::vector<agents::PolicySpec> kMix{{agents::PolicyKind::RiskWeighted, 0.4, 0.3},
                                           {agents::PolicyKind::Negligent},
                                           {agents::PolicyKind::Random},
                                           {agents::PolicyKind::DeadlineProcrastinator}};

}  // namespace

TEST(Replay, ReproducesLiveFinalState) {
  for (Regime regime : {Regime::Individual, Regime::Group}) {
    GameConfig cfg;
    cfg.regime = regime;
    cfg.manager_observability = 0.7;
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
      const LiveRun run = live(cfg, kMix, seed);
      EXPECT_EQ(replay(run.log), run.final_state) << "seed " << seed;
    }
  }
}

TEST(Replay, RunGameLogMatchesManualLoop) {
  GameConfig cfg;
  std::vector<std::unique_ptr<agents::BotSource>> owned;
  std::vector<ActionSource*> sources;
  for (std::size_t i = 0; i < kMix.size(); ++i) {
    owned.push_back(std::make_unique<agents::BotSource>(kMix[i], 9, "P" + std::to_string(i + 1)));
    sources.push_back(owned.back().get());
  }
  RunOptions opts;
  opts.game_id = "g";
  opts.players = default_player_seeds(std::vector<double>(4, 0.3));
  EXPECT_EQ(to_jsonl(run_game(cfg, sources, 9, opts)), to_jsonl(live(cfg, kMix, 9).log));
}

TEST(Replay, TruncatedLogEqualsPausedLiveState) {
  const LiveRun run = live(GameConfig{}, kMix, 4);
  for (std::size_t k = 0; k < run.checkpoints.size(); k += 7) {
    const auto& [n, state] = run.checkpoints[k];
    const EventLog prefix(run.log.begin(), run.log.begin() + static_cast<std::ptrdiff_t>(n));
    const GameState replayed = replay(prefix);
    EXPECT_EQ(replayed, state) << "after " << n << " events";
    if (n < run.log.size()) {
      EXPECT_EQ(replayed.phase, Phase::AwaitingActions);
    }
  }
}

TEST(Replay, SeqGapNamesFirstBadSeq) {
  LiveRun run = live(GameConfig{}, kMix, 2);
  run.log.erase(run.log.begin() + 10);
  try {
    replay(run.log);
    FAIL();
  } catch (const CorruptionError& e) {
    EXPECT_EQ(e.seq(), 12U);
  }
}

TEST(Replay, EmptyLogIsCorrupt) { EXPECT_THROW(replay(EventLog{}), CorruptionError); }

TEST(Replay, TamperedPayloadIsDetected) {
  const LiveRun run = live(GameConfig{}, kMix, 3);
  int caught = 0, tried = 0;
  for (std::size_t i = 1; i < run.log.size(); i += 37) {
    EventLog bad = run.log;
    Event& e = bad[i];
    if (e.kind == EventKind::ProjectBanked) e.payload["points"] = e.payload["points"].get<int>() + 1;
    else if (e.kind == EventKind::Attack) e.payload["effects"] = Json::object();
    else if (e.kind == EventKind::ActionSubmitted) e.payload["player"] = "nobody";
    else if (e.kind == EventKind::RoundStarted) e.round += 1;
    else continue;
    ++tried;
    try {
      replay(bad);
    } catch (const CorruptionError& err) {
      ++caught;
      EXPECT_LE(err.seq(), e.seq);
    }
  }
  EXPECT_GT(tried, 0);
  EXPECT_EQ(caught, tried);
}

TEST(EventLog, JsonLinesRoundTrip) {
  const LiveRun run = live(GameConfig{}, kMix, 5);
  const std::string text = to_jsonl(run.log);
  EXPECT_EQ(parse_jsonl(text), run.log);
  const auto first = text.substr(0, text.find('\n'));
  EXPECT_EQ(first.rfind("{\"game_id\":\"g\",\"round\":0,\"seq\":1,\"kind\":\"game-created\",\"payload\":", 0), 0U);
}

TEST(EventLog, FileWriteIsReadBack) {
  const auto dir = std::filesystem::temp_directory_path() / "normgame_eventlog_test";
  std::filesystem::create_directories(dir);
  const LiveRun run = live(GameConfig{}, kMix, 6);
  write_event_log(dir / "g.jsonl", run.log);
  EXPECT_EQ(read_event_log(dir / "g.jsonl"), run.log);
  EXPECT_FALSE(std::filesystem::exists(dir / "g.jsonl.tmp"));
  std::filesystem::remove_all(dir);
}

TEST(EventLog, RejectsExtraOrMissingFields) {
  EXPECT_THROW(parse_json_line(R"({"game_id":"g","round":0,"seq":1,"kind":"game-created"})"), CorruptionError);
  EXPECT_THROW(parse_json_line(R"({"game_id":"g","round":0,"seq":1,"kind":"game-created","payload":{},"x":1})"),
               CorruptionError);
  EXPECT_THROW(parse_json_line(R"({"game_id":"g","round":0,"seq":1,"kind":"bogus","payload":{}})"), CorruptionError);
  EXPECT_THROW(parse_json_line("not json"), CorruptionError);
}
