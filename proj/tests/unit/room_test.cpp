#include <gtest/gtest.h>

#include <cerrno>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "normgame/agents/policy.hpp"
#include "normgame/error.hpp"
#include "normgame/replay.hpp"
#include "normgame/server/room_manager.hpp"

using namespace normgame;
using namespace normgame::server;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fails the next writes after arming: half the batch lands, then EIO.
struct Faults {
  bool armed = false;
  bool fail_fsync = false;
};

class FlakySink : public FileSink {
 public:
  FlakySink(const fs::path& p, std::shared_ptr<Faults> f) : FileSink(p), faults_(std::move(f)) {}

 protected:
  ssize_t do_write(int fd, const char* data, std::size_t size) override {
    if (!faults_->armed || faults_->fail_fsync) return FileSink::do_write(fd, data, size);
    if (size > 1) return FileSink::do_write(fd, data, size / 2);
    errno = EIO;
    return -1;
  }
  int do_fsync(int fd) override {
    if (faults_->armed && faults_->fail_fsync) {
      errno = EIO;
      return -1;
    }
    return FileSink::do_fsync(fd);
  }

 private:
  std::shared_ptr<Faults> faults_;
};

class RoomTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("normgame_room_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    faults_ = std::make_shared<Faults>();
    restart();
  }
  void TearDown() override { fs::remove_all(dir_); }

  ServerOptions options() {
    ServerOptions o;
    o.storage = dir_;
    o.round_timeout = 10s;
    auto faults = faults_;
    o.sinks = [faults](const fs::path& p) { return std::make_unique<FlakySink>(p, faults); };
    return o;
  }

  // Drops the manager without any shutdown step, as a crash would.
  void restart() {
    rm_.reset();
    rm_ = std::make_unique<RoomManager>(options());
  }

  Outbox send(SessionId s, MessageType type, const std::string& room, Json body, const std::string& req = "r1") {
    Message m;
    m.type = type;
    m.room_code = room;
    m.request_id = req;
    m.body = std::move(body);
    return rm_->handle(s, m, now_);
  }
  Outbox join(SessionId s, const std::string& room, const std::string& name, Json extra = Json::object()) {
    extra["display_name"] = name;
    return send(s, MessageType::Join, room, extra);
  }
  Outbox submit(SessionId s, const std::string& room, const Action& a) {
    return send(s, MessageType::SubmitAction, room, {{"action", to_json(a)}});
  }

  // What a compliant human would click now.
  Action sensible_move(const std::string& room, const PlayerId& seat) {
    const GameState g = *rm_->snapshot(room).game;
    Rng rng(1);
    return agents::decide({agents::PolicyKind::CompliantFirst}, player_view(g, seat), rng);
  }

  std::string two_human_room(GameConfig cfg = {}, std::map<PlayerId, agents::PolicySpec> bots = {}) {
    RoomSetup setup;
    cfg.player_count = 2 + static_cast<int>(bots.size());
    setup.config = cfg;
    setup.bots = std::move(bots);
    return rm_->create_room(setup, now_);
  }

  // Plays every open round with sensible moves from both humans.
  void play_rounds(const std::string& room, int rounds) {
    for (int i = 0; i < rounds && rm_->snapshot(room).status == RoomStatus::InRound; ++i) {
      for (auto [session, seat] : {std::pair<SessionId, PlayerId>{1, "P1"}, {2, "P2"}})
        if (!rm_->snapshot(room).acted.contains(seat)) submit(session, room, sensible_move(room, seat));
    }
  }

  fs::path events_path(const std::string& room) { return rm_->room_dir(room) / "events.jsonl"; }

  fs::path dir_;
  std::shared_ptr<Faults> faults_;
  std::unique_ptr<RoomManager> rm_;
  Clock::time_point now_ = Clock::now();
};

std::vector<Message> of(const Outbox& out, SessionId s, MessageType t) {
  std::vector<Message> r;
  for (const auto& o : out)
    if (o.session == s && o.message.type == t) r.push_back(o.message);
  return r;
}

std::string error_reason(const Outbox& out, SessionId s) {
  const auto errs = of(out, s, MessageType::Error);
  return errs.empty() ? "" : errs.front().body.at("reason").get<std::string>();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_F(RoomTest, CreateRoomValidatesSetup) {
  RoomSetup s;
  s.room_code = "abc";
  EXPECT_THROW(rm_->create_room(s, now_), ConfigError);
  s.room_code = "ABC234";
  EXPECT_EQ(rm_->create_room(s, now_), "ABC234");
  EXPECT_THROW(rm_->create_room(s, now_), ConfigError);
  RoomSetup b;
  b.bots["P9"] = {};
  EXPECT_THROW(rm_->create_room(b, now_), ConfigError);
  const std::string code = rm_->create_room(RoomSetup{}, now_);
  EXPECT_TRUE(is_valid_room_code(code));
  EXPECT_EQ(rm_->snapshot(code).status, RoomStatus::Lobby);
  EXPECT_TRUE(fs::exists(rm_->room_dir(code) / "manifest.json"));
}

TEST_F(RoomTest, RoomSetupFromJson) {
  const auto s = room_setup_from_json(Json::parse(
      R"({"room_code": "GAME42", "config": {"player_count": 3, "rounds": 5}, "bots": {"P3": {"kind": "negligent"}}})"));
  EXPECT_EQ(s.room_code, "GAME42");
  EXPECT_EQ(s.config.rounds, 5);
  EXPECT_EQ(s.bots.at("P3").kind, agents::PolicyKind::Negligent);
  EXPECT_EQ(room_setup_from_json(Json::parse(R"({"rounds": 7})")).config.rounds, 7);
  EXPECT_THROW(room_setup_from_json(Json::parse(R"({"config": {}, "extra": 1})")), ConfigError);
}

TEST_F(RoomTest, GameStartsOnlyWhenEverySeatIsFilled) {
  const std::string room = two_human_room();
  Outbox a = join(1, room, "ann");
  ASSERT_EQ(of(a, 1, MessageType::Joined).size(), 1U);
  const Message joined = of(a, 1, MessageType::Joined).front();
  EXPECT_EQ(joined.body.at("seat"), "P1");
  EXPECT_EQ(joined.request_id, "r1");
  EXPECT_EQ(joined.body.at("seat_token").get<std::string>().size(), 32U);
  EXPECT_EQ(of(a, 1, MessageType::RoomState).front().body.at("status"), "lobby");
  EXPECT_TRUE(of(a, 1, MessageType::RoundBegin).empty());
  EXPECT_EQ(rm_->snapshot(room).status, RoomStatus::Lobby);

  Outbox b = join(2, room, "bob");
  EXPECT_EQ(of(b, 2, MessageType::Joined).front().body.at("seat"), "P2");
  for (SessionId s : {1, 2}) {
    ASSERT_EQ(of(b, s, MessageType::RoundBegin).size(), 1U) << s;
    const Message rb = of(b, s, MessageType::RoundBegin).front();
    EXPECT_EQ(rb.body.at("round"), 1);
    EXPECT_EQ(rb.body.at("deadline_ms"), 10000);
    EXPECT_EQ(rb.body.at("view").at("self").at("id"), s == 1 ? "P1" : "P2");
    EXPECT_EQ(of(b, s, MessageType::RoomState).front().body.at("status"), "in_round");
  }
  EXPECT_EQ(rm_->snapshot(room).status, RoomStatus::InRound);
  EXPECT_EQ(replay(read_event_log(events_path(room))), *rm_->snapshot(room).game);
}

TEST_F(RoomTest, JoinErrors) {
  const std::string room = two_human_room({}, {{"P3", {agents::PolicyKind::Random}}});
  EXPECT_EQ(error_reason(join(1, room, ""), 1), "bad_request");
  EXPECT_EQ(error_reason(send(1, MessageType::Join, room, Json::object()), 1), "bad_request");
  EXPECT_EQ(error_reason(join(1, room, "ann", {{"risk_score", 2.0}}), 1), "bad_request");
  EXPECT_EQ(error_reason(join(1, room, "ann", {{"seat", "P3"}}), 1), "seat_reserved");
  EXPECT_EQ(error_reason(join(1, room, "ann", {{"seat", "P7"}}), 1), "bad_request");
  join(1, room, "ann", {{"seat", "P2"}});
  EXPECT_EQ(error_reason(join(1, room, "again"), 1), "already_joined");
  EXPECT_EQ(error_reason(join(2, room, "ann"), 2), "duplicate_name");
  EXPECT_EQ(error_reason(join(2, room, "bob", {{"seat", "P2"}}), 2), "seat_taken");
  EXPECT_EQ(error_reason(join(2, room, "bob", {{"seat_token", "feedface"}}), 2), "bad_token");
  join(2, room, "bob");
  EXPECT_EQ(rm_->snapshot(room).seats[0].display_name, "bob");
  EXPECT_EQ(error_reason(join(3, room, "cy"), 3), "room_full");
}

TEST_F(RoomTest, EnvelopeErrors) {
  const std::string room = two_human_room();
  EXPECT_EQ(error_reason(rm_->handle_text(1, "{not json", now_), 1), "bad_request");
  EXPECT_EQ(error_reason(rm_->handle_text(1, R"({"type":"join","body":{}})", now_), 1), "bad_request");
  EXPECT_EQ(error_reason(join(1, "ZZZZZZ", "ann"), 1), "unknown_room");
  EXPECT_EQ(error_reason(send(1, MessageType::RoundBegin, room, Json::object()), 1), "bad_request");
  Message m;
  m.type = MessageType::Join;
  m.room_code = room;
  m.request_id = "x";
  m.protocol_version = 2;
  m.body = {{"display_name", "ann"}};
  const Outbox out = rm_->handle(1, m, now_);
  EXPECT_EQ(error_reason(out, 1), "unsupported_protocol");
  EXPECT_EQ(of(out, 1, MessageType::Error).front().request_id, "x");
}

TEST_F(RoomTest, SubmitProtocol) {
  const std::string room = two_human_room();
  EXPECT_EQ(error_reason(submit(1, room, Skip{}), 1), "not_joined");
  join(1, room, "ann");
  EXPECT_EQ(error_reason(submit(1, room, Skip{}), 1), "not_in_round");
  join(2, room, "bob");
  EXPECT_EQ(error_reason(send(1, MessageType::SubmitAction, room, {{"action", {{"type", "dance"}}}}), 1),
            "bad_request");
  EXPECT_EQ(error_reason(send(1, MessageType::SubmitAction, room, {{"action", to_json(Action{Skip{}})}, {"round", 4}}), 1),
            "not_in_round");

  const Outbox ok = submit(1, room, sensible_move(room, "P1"));
  ASSERT_EQ(of(ok, 1, MessageType::ActionAck).size(), 1U);
  EXPECT_EQ(of(ok, 1, MessageType::ActionAck).front().body.at("round"), 1);
  EXPECT_EQ(error_reason(submit(1, room, Skip{}), 1), "already_acted");
  EXPECT_EQ(rm_->snapshot(room).acted, (std::set<PlayerId>{"P1"}));

  // A disabled action still uses up the seat's turn.
  const Outbox bad = submit(2, room, Skip{});
  ASSERT_EQ(of(bad, 2, MessageType::ActionRejected).size(), 1U);
  EXPECT_EQ(of(bad, 2, MessageType::ActionRejected).front().body.at("reason"), "not_sanctioned");
  EXPECT_EQ(of(bad, 2, MessageType::RoundResult).size(), 1U);
  EXPECT_EQ(rm_->snapshot(room).game->round, 2);
  const EventLog log = read_event_log(events_path(room));
  bool logged = false;
  for (const auto& e : log)
    if (e.kind == EventKind::ActionRejected && e.payload.at("player") == "P2") logged = true;
  EXPECT_TRUE(logged);
}

TEST_F(RoomTest, RoundResultShowsOnlyOwnPlayerEvents) {
  GameConfig cfg;
  cfg.attack_probability = 1.0;
  const std::string room = two_human_room(cfg);
  join(1, room, "ann");
  join(2, room, "bob");
  submit(1, room, sensible_move(room, "P1"));
  const Outbox out = submit(2, room, sensible_move(room, "P2"));
  for (SessionId s : {1, 2}) {
    const Message r = of(out, s, MessageType::RoundResult).at(0);
    const std::string me = s == 1 ? "P1" : "P2";
    bool own_attack = false;
    for (const auto& e : r.body.at("events")) {
      if (e.at("payload").contains("player")) {
        EXPECT_EQ(e.at("payload").at("player"), me);
      }
      own_attack |= e.at("kind") == "attack";
    }
    EXPECT_TRUE(own_attack);
    EXPECT_FALSE(r.body.at("timed_out").get<bool>());
    EXPECT_EQ(of(out, s, MessageType::RoundBegin).at(0).body.at("round"), 2);
  }
}

TEST_F(RoomTest, MissingSeatTimesOutAtTheDeadline) {
  const std::string room = two_human_room();
  join(1, room, "ann");
  join(2, room, "bob");
  submit(1, room, sensible_move(room, "P1"));
  EXPECT_TRUE(rm_->tick(now_ + 9s).empty());
  EXPECT_EQ(rm_->snapshot(room).game->round, 1);

  const Outbox out = rm_->tick(now_ + 10s);
  EXPECT_FALSE(of(out, 1, MessageType::RoundResult).at(0).body.at("timed_out").get<bool>());
  EXPECT_TRUE(of(out, 2, MessageType::RoundResult).at(0).body.at("timed_out").get<bool>());
  EXPECT_EQ(rm_->snapshot(room).game->round, 2);
  EXPECT_EQ(*rm_->snapshot(room).deadline, now_ + 20s);
  int timeouts = 0;
  for (const auto& e : read_event_log(events_path(room)))
    if (e.kind == EventKind::ActionRejected && e.payload.at("reason") == "timeout") {
      EXPECT_EQ(e.payload.at("player"), "P2");
      ++timeouts;
    }
  EXPECT_EQ(timeouts, 1);
}

TEST_F(RoomTest, DisconnectedSeatResumesWithItsToken) {
  const std::string room = two_human_room();
  join(1, room, "ann");
  const std::string token = of(join(2, room, "bob"), 2, MessageType::Joined).front().body.at("seat_token");
  const Outbox gone = rm_->disconnect(2, now_);
  const Message state = of(gone, 1, MessageType::RoomState).at(0);
  EXPECT_FALSE(state.body.at("seats").at(1).at("connected").get<bool>());
  EXPECT_EQ(error_reason(submit(2, room, Skip{}), 2), "not_joined");

  submit(1, room, sensible_move(room, "P1"));
  EXPECT_EQ(rm_->snapshot(room).game->round, 1);
  const Outbox back = send(7, MessageType::Join, room, {{"seat_token", token}});
  EXPECT_EQ(of(back, 7, MessageType::Joined).front().body.at("seat"), "P2");
  const Message rb = of(back, 7, MessageType::RoundBegin).at(0);
  EXPECT_EQ(rb.body.at("round"), 1);
  EXPECT_FALSE(rb.body.at("already_acted").get<bool>());
  submit(7, room, sensible_move(room, "P2"));
  EXPECT_EQ(rm_->snapshot(room).game->round, 2);
}

TEST_F(RoomTest, SanctionedHumanIsSkippedWithoutWaiting) {
  GameConfig cfg;
  cfg.attack_probability = 1.0;
  cfg.manager_observability = 1.0;
  cfg.rounds = 12;
  const std::string room = two_human_room(cfg);
  join(1, room, "ann");
  join(2, room, "bob");
  bool saw_forced = false;
  // P1 never repairs, so it is sanctioned; P2 plays sensibly.
  for (int i = 0; i < 12 && rm_->snapshot(room).status == RoomStatus::InRound; ++i) {
    const GameState g = *rm_->snapshot(room).game;
    if (player_view(g, "P1").forced_skip) {
      saw_forced = true;
      EXPECT_TRUE(rm_->snapshot(room).acted.contains("P1"));
      EXPECT_EQ(error_reason(submit(1, room, Skip{}), 1), "already_acted");
    } else {
      Rng rng(1);
      submit(1, room, agents::decide({agents::PolicyKind::Negligent}, player_view(g, "P1"), rng));
    }
    if (!rm_->snapshot(room).acted.contains("P2")) submit(2, room, sensible_move(room, "P2"));
  }
  EXPECT_TRUE(saw_forced);
}

TEST_F(RoomTest, FinishedGameSendsResultsAndAcceptsSurvey) {
  GameConfig cfg;
  cfg.rounds = 3;
  const std::string room = two_human_room(cfg);
  join(1, room, "ann");
  const std::string token = of(join(2, room, "bob"), 2, MessageType::Joined).front().body.at("seat_token");
  EXPECT_EQ(error_reason(send(1, MessageType::SurveyAnswer, room,
                              {{"game_id", room}, {"item", "sanction_influence"}, {"value", 3}}),
                         1),
            "not_finished");
  submit(1, room, sensible_move(room, "P1"));
  submit(2, room, sensible_move(room, "P2"));
  submit(1, room, sensible_move(room, "P1"));
  submit(2, room, sensible_move(room, "P2"));
  submit(1, room, sensible_move(room, "P1"));
  const Outbox end = submit(2, room, sensible_move(room, "P2"));
  EXPECT_EQ(rm_->snapshot(room).status, RoomStatus::Finished);
  for (SessionId s : {1, 2}) {
    const Message over = of(end, s, MessageType::GameOver).at(0);
    EXPECT_EQ(over.body.at("game_id"), room);
    EXPECT_TRUE(over.body.at("scores").contains("P1"));
    EXPECT_EQ(of(end, s, MessageType::SurveyPrompt).at(0).body.at("items").size(), 2U);
  }
  EXPECT_EQ(error_reason(submit(1, room, Skip{}), 1), "not_in_round");

  auto answer = [&](SessionId s, const std::string& item, Json value) {
    return send(s, MessageType::SurveyAnswer, room, {{"game_id", room}, {"item", item}, {"value", value}});
  };
  EXPECT_EQ(of(answer(1, "sanction_influence", 5), 1, MessageType::ActionAck).size(), 1U);
  EXPECT_EQ(error_reason(answer(1, "sanction_influence", 6), 1), "invalid_answer");
  EXPECT_EQ(error_reason(answer(1, "sanction_influence", 0), 1), "invalid_answer");
  EXPECT_EQ(error_reason(answer(1, "sanction_influence", "5"), 1), "invalid_answer");
  EXPECT_EQ(error_reason(answer(1, "mood", 3), 1), "invalid_answer");
  EXPECT_EQ(error_reason(send(1, MessageType::SurveyAnswer, room, {{"game_id", "other"}, {"item", "mood"}, {"value", 1}}), 1),
            "invalid_answer");
  answer(1, "sanction_influence", 2);
  answer(2, "productivity_detriment", 4);
  const auto lines = lines_of(slurp(rm_->room_dir(room) / "survey.jsonl"));
  ASSERT_EQ(lines.size(), 3U);
  EXPECT_EQ(Json::parse(lines[1]), Json::parse(R"({"game_id":")" + room +
                                                R"(","seat":"P1","item":"sanction_influence","value":2})"));

  // Rejoining a finished room replays the ending.
  rm_->disconnect(2, now_);
  const Outbox again = send(9, MessageType::Join, room, {{"seat_token", token}});
  EXPECT_EQ(of(again, 9, MessageType::GameOver).size(), 1U);
  EXPECT_EQ(of(again, 9, MessageType::SurveyPrompt).size(), 1U);
}

TEST_F(RoomTest, AllBotRoomPlaysExactlyLikeRunGame) {
  GameConfig cfg;
  cfg.seed = 99;
  cfg.player_count = 3;
  RoomSetup setup;
  setup.config = cfg;
  const std::vector<agents::PolicySpec> specs{
      {agents::PolicyKind::RiskWeighted, 0.5, 0.2}, {agents::PolicyKind::Negligent}, {agents::PolicyKind::Random}};
  for (int i = 0; i < 3; ++i) setup.bots["P" + std::to_string(i + 1)] = specs[static_cast<std::size_t>(i)];
  const std::string room = rm_->create_room(setup, now_);
  EXPECT_EQ(rm_->snapshot(room).status, RoomStatus::Finished);

  std::vector<std::unique_ptr<agents::BotSource>> owned;
  std::vector<ActionSource*> sources;
  for (int i = 0; i < 3; ++i) {
    owned.push_back(std::make_unique<agents::BotSource>(specs[static_cast<std::size_t>(i)], 99, "P" + std::to_string(i + 1)));
    sources.push_back(owned.back().get());
  }
  RunOptions opts;
  opts.game_id = room;
  EXPECT_EQ(to_jsonl(read_event_log(events_path(room))), to_jsonl(run_game(cfg, sources, 99, opts)));
}

TEST_F(RoomTest, StorageFailureFreezesTheRoomAndLeavesWholeLines) {
  for (bool fsync_fault : {false, true}) {
    faults_->armed = false;
    faults_->fail_fsync = fsync_fault;
    const std::string room = two_human_room();
    join(1, room, "ann");
    join(2, room, "bob");
    play_rounds(room, 3);
    const std::string before = slurp(events_path(room));
    const GameState state = *rm_->snapshot(room).game;

    faults_->armed = true;
    submit(1, room, sensible_move(room, "P1"));
    const Outbox out = submit(2, room, sensible_move(room, "P2"));
    EXPECT_EQ(error_reason(out, 1), "storage_failure");
    EXPECT_EQ(error_reason(out, 2), "storage_failure");
    EXPECT_TRUE(of(out, 1, MessageType::RoundResult).empty());
    EXPECT_EQ(rm_->snapshot(room).status, RoomStatus::Frozen);
    EXPECT_EQ(*rm_->snapshot(room).game, state);
    EXPECT_EQ(slurp(events_path(room)), before);
    EXPECT_EQ(error_reason(submit(1, room, Skip{}), 1), "room_frozen");
    faults_->armed = false;

    // The log on disk holds the last acknowledged round.
    rm_->disconnect(1, now_);
    rm_->disconnect(2, now_);
    restart();
    rm_->recover(now_);
    EXPECT_EQ(rm_->snapshot(room).status, RoomStatus::InRound);
    EXPECT_EQ(*rm_->snapshot(room).game, state);
  }
}

TEST_F(RoomTest, FailedJoinPersistenceIsReported) {
  const std::string room = two_human_room();
  // A directory where the manifest's temp file goes makes the write fail.
  fs::create_directories(rm_->room_dir(room) / "manifest.json.tmp");
  EXPECT_EQ(error_reason(join(1, room, "ann"), 1), "storage_failure");
  EXPECT_FALSE(rm_->snapshot(room).seats[0].filled());
  fs::remove(rm_->room_dir(room) / "manifest.json.tmp");
  EXPECT_EQ(of(join(1, room, "ann"), 1, MessageType::Joined).size(), 1U);
}

TEST_F(RoomTest, RecoveryRestoresTheInterruptedRound) {
  const std::string room = two_human_room({}, {{"P3", {agents::PolicyKind::RiskWeighted, 0.4, 0.3}}});
  join(1, room, "ann");
  const std::string token = of(join(2, room, "bob"), 2, MessageType::Joined).front().body.at("seat_token");
  play_rounds(room, 7);
  submit(1, room, sensible_move(room, "P1"));  // acknowledged but the round is still open
  const RoomSnapshot before = rm_->snapshot(room);
  ASSERT_EQ(before.status, RoomStatus::InRound);

  restart();
  now_ += 1h;
  EXPECT_EQ(rm_->recover(now_), std::vector<std::string>{room});
  const RoomSnapshot after = rm_->snapshot(room);
  EXPECT_EQ(after.status, RoomStatus::InRound);
  ASSERT_TRUE(after.game);
  EXPECT_EQ(*after.game, *before.game);
  EXPECT_EQ(state_hash(*after.game), state_hash(*before.game));
  EXPECT_EQ(replay(read_event_log(events_path(room))), *after.game);
  EXPECT_EQ(*after.deadline, now_ + 10s);
  // Only the bot's buffered move survives; humans resubmit.
  EXPECT_EQ(after.acted, (std::set<PlayerId>{"P3"}));
  EXPECT_EQ(after.seats[1].token, token);

  const Outbox back = send(5, MessageType::Join, room, {{"seat_token", token}});
  EXPECT_EQ(of(back, 5, MessageType::RoundBegin).at(0).body.at("round"), before.game->round);
  EXPECT_EQ(of(back, 5, MessageType::RoomState).at(0).body.at("state_hash"), state_hash(*before.game));
}

TEST_F(RoomTest, RecoveryOfLobbyAndFinishedRooms) {
  const std::string lobby = two_human_room();
  join(1, lobby, "ann");
  GameConfig cfg;
  cfg.rounds = 2;
  cfg.player_count = 2;
  RoomSetup bots;
  bots.config = cfg;
  bots.bots = {{"P1", {agents::PolicyKind::GreedyScore}}, {"P2", {agents::PolicyKind::Negligent}}};
  const std::string done = rm_->create_room(bots, now_);
  const GameState final_state = *rm_->snapshot(done).game;

  restart();
  rm_->recover(now_);
  EXPECT_EQ(rm_->snapshot(lobby).status, RoomStatus::Lobby);
  EXPECT_TRUE(rm_->snapshot(lobby).seats[0].filled());
  EXPECT_EQ(rm_->snapshot(done).status, RoomStatus::Finished);
  EXPECT_EQ(*rm_->snapshot(done).game, final_state);
  EXPECT_TRUE(rm_->recover(now_).empty());
}

class TornLogTest : public RoomTest {
 protected:
  // A room several rounds in, its log, and the state after each begin batch.
  void prepare() {
    room_ = two_human_room({}, {{"P3", {agents::PolicyKind::Random}}});
    join(1, room_, "ann");
    join(2, room_, "bob");
    play_rounds(room_, 6);
    text_ = slurp(events_path(room_));
    lines_ = lines_of(text_);
    restart();
  }
  std::size_t first_line(EventKind kind, int round) const {
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      const Event e = parse_json_line(lines_[i]);
      if (e.kind == kind && e.round == round) return i;
    }
    return lines_.size();
  }
  GameState state_before(std::size_t line) const {
    EventLog log;
    for (std::size_t i = 0; i < line; ++i) log.push_back(parse_json_line(lines_[i]));
    return replay(log);
  }
  void keep_lines(std::size_t n, const std::string& tail = "") {
    std::string cut;
    for (std::size_t i = 0; i < n; ++i) cut += lines_[i] + "\n";
    std::ofstream(events_path(room_), std::ios::binary | std::ios::trunc) << cut << tail;
  }

  std::string room_, text_;
  std::vector<std::string> lines_;
};

TEST_F(TornLogTest, PartialFinalLineIsDropped) {
  prepare();
  const GameState expected = state_before(lines_.size());
  keep_lines(lines_.size(), R"({"game_id":"x","round":7,"se)");
  rm_->recover(now_);
  EXPECT_EQ(*rm_->snapshot(room_).game, expected);
  EXPECT_EQ(slurp(events_path(room_)), text_);
}

TEST_F(TornLogTest, TornRoundStartIsCompleted) {
  prepare();
  // Needs a round whose start batch has more than one event.
  int round = 2;
  while (round < 7 && first_line(EventKind::ActionSubmitted, round) - first_line(EventKind::RoundStarted, round) < 2)
    ++round;
  ASSERT_LT(round, 7);
  const std::size_t begin = first_line(EventKind::RoundStarted, round);
  const std::size_t submitted = first_line(EventKind::ActionSubmitted, round);
  keep_lines(begin + 1);
  rm_->recover(now_);
  EXPECT_EQ(rm_->snapshot(room_).status, RoomStatus::InRound);
  EXPECT_EQ(*rm_->snapshot(room_).game, state_before(submitted));
  EXPECT_EQ(lines_of(slurp(events_path(room_))).size(), submitted);
}

TEST_F(TornLogTest, TornSubmissionBatchIsDiscarded) {
  prepare();
  const std::size_t submitted = first_line(EventKind::ActionSubmitted, 4);
  keep_lines(submitted + 2);
  rm_->recover(now_);
  EXPECT_EQ(*rm_->snapshot(room_).game, state_before(submitted));
  EXPECT_EQ(rm_->snapshot(room_).game->round, 4);
  EXPECT_EQ(lines_of(slurp(events_path(room_))).size(), submitted);
}

TEST_F(TornLogTest, TamperedLogFreezesTheRoom) {
  prepare();
  const std::size_t at = first_line(EventKind::ActionApplied, 3);
  ASSERT_LT(at, lines_.size());
  Event e = parse_json_line(lines_[at]);
  e.payload["note"] = "edited";
  lines_[at] = to_json_line(e);
  keep_lines(lines_.size());
  rm_->recover(now_);
  const RoomSnapshot s = rm_->snapshot(room_);
  EXPECT_EQ(s.status, RoomStatus::Frozen);
  EXPECT_FALSE(s.frozen_reason.empty());
  EXPECT_EQ(error_reason(join(1, room_, "zed"), 1), "room_frozen");
}

TEST(StateHash, IsStableHex) {
  GameConfig cfg;
  const GameState a = new_game(cfg, std::vector<double>(4, 0.0));
  GameState b = a;
  EXPECT_EQ(state_hash(a), state_hash(b));
  EXPECT_EQ(state_hash(a).size(), 16U);
  b.players[0].score += 1;
  EXPECT_NE(state_hash(a), state_hash(b));
}

TEST(Protocol, RoundTripAndDecodeErrors) {
  Message m;
  m.type = MessageType::SubmitAction;
  m.room_code = "ABC234";
  m.request_id = "7";
  m.body = {{"action", to_json(Action{CompleteImmunityTask{Color::Red}})}};
  EXPECT_EQ(decode(encode(m)), m);
  for (int t = 0; t <= static_cast<int>(MessageType::Error); ++t) {
    const auto type = static_cast<MessageType>(t);
    EXPECT_EQ(parse_message_type(to_string(type)), type);
  }
  EXPECT_TRUE(is_client_message(MessageType::SurveyAnswer));
  EXPECT_FALSE(is_client_message(MessageType::RoundBegin));
  EXPECT_THROW(decode("[]"), ProtocolError);
  EXPECT_THROW(decode(R"({"type":"wave","room_code":"A","request_id":"1","protocol_version":1,"body":{}})"),
               ProtocolError);
  EXPECT_THROW(decode(R"({"type":"join","protocol_version":1,"body":{}})"), ProtocolError);
  const Message e = error_message("ROOM22", "9", "bad_token", "nope");
  EXPECT_EQ(e.body.at("reason"), "bad_token");
  EXPECT_EQ(e.body.at("message"), "nope");
}

TEST(FileSinkTest, AppendsWholeBatches) {
  const fs::path p = fs::temp_directory_path() / "normgame_sink_test.jsonl";
  fs::remove(p);
  {
    FileSink sink(p);
    const std::vector<std::string> a{"one", "two"};
    sink.append_lines(a);
    const std::vector<std::string> b{"three"};
    sink.append_lines(b);
  }
  EXPECT_EQ(slurp(p), "one\ntwo\nthree\n");
  fs::remove(p);
}
