#include "normgame/server/room_manager.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "normgame/replay.hpp"
#include "normgame/rules.hpp"

namespace normgame::server {

namespace fs = std::filesystem;

struct RoomManager::Room {
  std::string code;
  GameConfig config;
  std::vector<Seat> seats;
  RoomStatus status = RoomStatus::Lobby;
  std::optional<GameState> game;
  std::optional<Clock::time_point> deadline;
  ActionMap pending;
  std::string frozen_reason;
  std::unique_ptr<FileSink> events;
  std::unique_ptr<FileSink> survey;

  Seat* seat(const PlayerId& id) {
    for (auto& s : seats)
      if (s.id == id) return &s;
    return nullptr;
  }
};

namespace {

constexpr std::string_view kManifest = "manifest.json";
constexpr std::string_view kEvents = "events.jsonl";
constexpr std::string_view kSurvey = "survey.jsonl";

std::string random_token(std::size_t hex_digits) {
  static std::random_device device;
  static std::mt19937_64 gen(device());
  std::string out;
  while (out.size() < hex_digits) out += fmt::format("{:016x}", gen());
  out.resize(hex_digits);
  return out;
}

std::string random_room_code() {
  static std::random_device device;
  static std::mt19937_64 gen(device());
  std::uniform_int_distribution<std::size_t> pick(0, kRoomCodeAlphabet.size() - 1);
  std::string code;
  for (int i = 0; i < 6; ++i) code += kRoomCodeAlphabet[pick(gen)];
  return code;
}

void atomic_write(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cannot write '" + tmp.string() + "'");
  std::size_t done = 0;
  while (done < text.size()) {
    const ssize_t n = ::write(fd, text.data() + done, text.size() - done);
    if (n <= 0) {
      ::close(fd);
      throw IoError("write failed for '" + tmp.string() + "'");
    }
    done += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw IoError("fsync failed for '" + tmp.string() + "'");
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

// Visible to `me`: events about nobody in particular and events about `me`.
bool visible_to(const Event& e, const PlayerId& me) {
  if (!e.payload.is_object() || !e.payload.contains("player")) return true;
  return e.payload.at("player") == me;
}

Json seat_json(const Seat& s) {
  Json j;
  j["seat"] = s.id;
  j["kind"] = s.bot ? "bot" : "human";
  if (s.bot) j["policy"] = agents::to_json(*s.bot);
  j["name"] = s.display_name;
  j["connected"] = s.bot.has_value() || s.session.has_value();
  return j;
}

struct LogLine {
  Event event;
  std::uintmax_t offset = 0;
};

// Complete lines of an event log. A final line without its newline is a torn
// append and is dropped; `valid_bytes` is where it begins.
std::vector<LogLine> read_log_lines(const fs::path& path, std::uintmax_t& valid_bytes) {
  std::vector<LogLine> out;
  valid_bytes = 0;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::size_t pos = 0;
  std::uint64_t line_no = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    ++line_no;
    out.push_back(LogLine{parse_json_line(std::string_view(text).substr(pos, nl - pos), line_no), pos});
    pos = nl + 1;
  }
  valid_bytes = pos;
  return out;
}

std::size_t matching_prefix(const std::vector<LogLine>& log, std::size_t pos, const std::vector<Event>& expect) {
  std::size_t k = 0;
  while (k < expect.size() && pos + k < log.size() && log[pos + k].event == expect[k]) ++k;
  return k;
}

struct Rebuilt {
  GameState state;
  // Lines of the log that belong to complete batches.
  std::size_t keep = 0;
  // Deterministic tail of a begin-round batch cut short by a crash.
  std::vector<Event> complete_with;
};

// Reruns the engine over the logged actions and checks every logged event.
// The server writes each batch with one append, so a crash can only leave a
// prefix of the final batch; a torn begin-round batch is completed (it draws no
// input), a torn submission batch is dropped (it was never acknowledged).
Rebuilt rebuild(const GameConfig& config, std::span<const PlayerSeed> seeds, const std::string& game_id,
                const std::vector<LogLine>& log) {
  auto mismatch = [&](std::size_t at, const std::string& what) {
    const std::uint64_t seq = at < log.size() ? log[at].event.seq : log.size() + 1;
    return CorruptionError(seq, what);
  };
  Step created = create_game(config, seeds, game_id);
  if (matching_prefix(log, 0, created.events) != created.events.size())
    throw mismatch(0, "game-created does not match the room manifest");
  Rebuilt r;
  r.state = std::move(created.state);
  std::size_t pos = created.events.size();
  while (true) {
    if (r.state.phase == Phase::Finished) {
      if (pos != log.size()) throw mismatch(pos, "events after game-over");
      break;
    }
    Step begun = begin_round(r.state);
    const std::size_t k = matching_prefix(log, pos, begun.events);
    if (pos + k == log.size() && k < begun.events.size()) {
      r.complete_with.assign(begun.events.begin() + static_cast<std::ptrdiff_t>(k), begun.events.end());
      r.state = std::move(begun.state);
      pos += k;
      break;
    }
    if (k < begun.events.size()) throw mismatch(pos + k, "round start differs from the engine's");
    r.state = std::move(begun.state);
    pos += k;
    if (pos == log.size()) break;

    ActionMap actions;
    std::set<PlayerId> timed_out;
    std::size_t end = pos;
    for (; end < log.size() && actions.size() < r.state.players.size(); ++end) {
      const Event& e = log[end].event;
      if (e.kind != EventKind::ActionSubmitted) continue;
      try {
        actions[e.payload.at("player").get<std::string>()] = action_from_json(e.payload.at("action"));
      } catch (const std::exception& ex) {
        throw mismatch(end, std::string("unreadable action: ") + ex.what());
      }
      if (end + 1 < log.size() && log[end + 1].event.kind == EventKind::ActionRejected &&
          log[end + 1].event.payload.value("reason", std::string()) == "timeout")
        timed_out.insert(e.payload.at("player").get<std::string>());
    }
    if (actions.size() < r.state.players.size()) break;  // torn submission batch
    Step resolved;
    try {
      resolved = submit_round(r.state, actions, timed_out);
    } catch (const Error& ex) {
      throw mismatch(pos, ex.what());
    }
    const std::size_t m = matching_prefix(log, pos, resolved.events);
    if (m == resolved.events.size()) {
      r.state = std::move(resolved.state);
      pos += m;
      continue;
    }
    if (pos + m == log.size()) break;  // torn submission batch
    throw mismatch(pos + m, "round resolution differs from the engine's");
  }
  r.keep = pos;
  return r;
}

}  // namespace

std::string_view to_string(RoomStatus s) {
  switch (s) {
    case RoomStatus::Lobby: return "lobby";
    case RoomStatus::InRound: return "in_round";
    case RoomStatus::BetweenRounds: return "between_rounds";
    case RoomStatus::Finished: return "finished";
    case RoomStatus::Frozen: return "frozen";
  }
  return "?";
}

bool is_valid_room_code(std::string_view code) {
  return code.size() == 6 &&
         std::all_of(code.begin(), code.end(), [](char c) { return kRoomCodeAlphabet.find(c) != std::string_view::npos; });
}

RoomSetup room_setup_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("room file must be a JSON object");
  RoomSetup s;
  if (!j.contains("config")) {
    s.config = config_from_json(j);
    return s;
  }
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "config" && it.key() != "bots" && it.key() != "room_code")
      throw ConfigError("unknown room file key '" + it.key() + "'");
  s.config = config_from_json(j.at("config"));
  if (j.contains("room_code")) {
    if (!j.at("room_code").is_string()) throw ConfigError("room_code must be a string");
    s.room_code = j.at("room_code").get<std::string>();
  }
  if (j.contains("bots")) {
    if (!j.at("bots").is_object()) throw ConfigError("bots must map seat ids to policies");
    for (auto it = j.at("bots").begin(); it != j.at("bots").end(); ++it)
      s.bots[it.key()] = agents::policy_from_json(it.value());
  }
  return s;
}

std::string state_hash(const GameState& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(s).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

RoomManager::RoomManager(ServerOptions options) : options_(std::move(options)) {
  if (options_.storage.empty()) throw ConfigError("server needs a storage directory");
  if (options_.round_timeout.count() <= 0) throw ConfigError("round timeout must be positive");
  std::error_code ec;
  fs::create_directories(options_.storage, ec);
  if (ec) throw IoError("cannot create '" + options_.storage.string() + "': " + ec.message());
}

RoomManager::~RoomManager() = default;

fs::path RoomManager::room_dir(const std::string& code) const { return options_.storage / code; }

bool RoomManager::has_room(const std::string& code) const { return rooms_.contains(code); }

std::vector<std::string> RoomManager::room_codes() const {
  std::vector<std::string> out;
  for (const auto& [code, r] : rooms_) out.push_back(code);
  return out;
}

RoomManager::Room& RoomManager::room(const std::string& code) {
  auto it = rooms_.find(code);
  if (it == rooms_.end()) throw NotFound("unknown room '" + code + "'");
  return *it->second;
}

RoomSnapshot RoomManager::snapshot(const std::string& code) const {
  auto it = rooms_.find(code);
  if (it == rooms_.end()) throw NotFound("unknown room '" + code + "'");
  const Room& r = *it->second;
  RoomSnapshot s;
  s.code = r.code;
  s.status = r.status;
  s.seats = r.seats;
  s.game = r.game;
  s.deadline = r.deadline;
  for (const auto& [id, a] : r.pending) s.acted.insert(id);
  s.frozen_reason = r.frozen_reason;
  return s;
}

std::string RoomManager::create_room(const RoomSetup& setup, Clock::time_point now) {
  setup.config.validate();
  std::string code = setup.room_code;
  if (code.empty()) {
    do code = random_room_code();
    while (rooms_.contains(code) || fs::exists(room_dir(code)));
  } else {
    if (!is_valid_room_code(code))
      throw ConfigError(fmt::format("room code '{}' must be 6 characters from {}", code, kRoomCodeAlphabet));
    if (rooms_.contains(code) || fs::exists(room_dir(code))) throw ConfigError("room '" + code + "' already exists");
  }
  auto r = std::make_unique<Room>();
  r->code = code;
  r->config = setup.config;
  for (int i = 0; i < setup.config.player_count; ++i) {
    Seat s;
    s.id = fmt::format("P{}", i + 1);
    if (auto it = setup.bots.find(s.id); it != setup.bots.end()) {
      it->second.validate();
      s.bot = it->second;
      s.display_name = fmt::format("bot-{}", agents::to_string(it->second.kind));
    }
    r->seats.push_back(std::move(s));
  }
  for (const auto& [id, p] : setup.bots)
    if (!r->seat(id)) throw ConfigError("bot for unknown seat '" + id + "'");

  std::error_code ec;
  fs::create_directories(room_dir(code), ec);
  if (ec) throw IoError("cannot create '" + room_dir(code).string() + "': " + ec.message());
  write_manifest(*r);
  r->events = options_.sinks(room_dir(code) / kEvents);
  r->survey = options_.sinks(room_dir(code) / kSurvey);
  Room& ref = *r;
  rooms_[code] = std::move(r);
  // A room made only of bots starts at once.
  Outbox ignored;
  if (std::all_of(ref.seats.begin(), ref.seats.end(), [](const Seat& s) { return s.filled(); }))
    start_game(ref, now, ignored);
  return code;
}

void RoomManager::write_manifest(const Room& r) const {
  Json seats = Json::array();
  for (const Seat& s : r.seats) {
    Json j;
    j["seat"] = s.id;
    if (s.bot) {
      j["kind"] = "bot";
      j["policy"] = agents::to_json(*s.bot);
    } else {
      j["kind"] = "human";
      j["name"] = s.display_name;
      j["token"] = s.token;
      j["risk_score"] = s.risk_score;
    }
    seats.push_back(j);
  }
  Json m;
  m["room_code"] = r.code;
  m["protocol_version"] = kProtocolVersion;
  m["config"] = to_json(r.config);
  m["seats"] = seats;
  atomic_write(room_dir(r.code) / kManifest, m.dump(2) + "\n");
}

std::vector<std::string> RoomManager::recover(Clock::time_point now) {
  std::vector<std::string> out;
  std::error_code ec;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(options_.storage, ec))
    if (entry.is_directory() && fs::exists(entry.path() / kManifest)) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    const std::string code = d.filename().string();
    if (rooms_.contains(code)) continue;
    load_room(d, now);
    out.push_back(code);
  }
  return out;
}

void RoomManager::load_room(const fs::path& dir, Clock::time_point now) {
  auto r = std::make_unique<Room>();
  r->code = dir.filename().string();
  Json manifest;
  {
    std::ifstream in(dir / kManifest);
    try {
      manifest = Json::parse(in);
      r->config = config_from_json(manifest.at("config"));
      for (const Json& s : manifest.at("seats")) {
        Seat seat;
        seat.id = s.at("seat").get<std::string>();
        if (s.at("kind") == "bot") {
          seat.bot = agents::policy_from_json(s.at("policy"));
          seat.display_name = fmt::format("bot-{}", agents::to_string(seat.bot->kind));
        } else {
          seat.display_name = s.value("name", std::string());
          seat.token = s.value("token", std::string());
          seat.risk_score = s.value("risk_score", 0.0);
        }
        r->seats.push_back(std::move(seat));
      }
    } catch (const std::exception& e) {
      r->status = RoomStatus::Frozen;
      r->frozen_reason = std::string("unreadable manifest: ") + e.what();
      rooms_[r->code] = std::move(r);
      return;
    }
  }
  Room& ref = *r;
  rooms_[ref.code] = std::move(r);
  Outbox ignored;
  try {
    const fs::path log_path = dir / kEvents;
    std::uintmax_t valid_bytes = 0;
    auto lines = read_log_lines(log_path, valid_bytes);
    std::error_code ec;
    if (fs::exists(log_path) && fs::file_size(log_path) != valid_bytes) fs::resize_file(log_path, valid_bytes);
    ref.events = options_.sinks(log_path);
    ref.survey = options_.sinks(dir / kSurvey);

    if (lines.empty()) {
      if (std::all_of(ref.seats.begin(), ref.seats.end(), [](const Seat& s) { return s.filled(); }))
        start_game(ref, now, ignored);
      return;
    }
    std::vector<PlayerSeed> seeds;
    for (const Seat& s : ref.seats) seeds.push_back(PlayerSeed{s.id, s.risk_score});
    Rebuilt rebuilt = rebuild(ref.config, seeds, ref.code, lines);
    if (rebuilt.keep < lines.size()) fs::resize_file(log_path, lines[rebuilt.keep].offset);
    EventLog kept;
    for (std::size_t i = 0; i < rebuilt.keep; ++i) kept.push_back(lines[i].event);
    if (!rebuilt.complete_with.empty()) {
      ref.events->append(rebuilt.complete_with);
      kept.insert(kept.end(), rebuilt.complete_with.begin(), rebuilt.complete_with.end());
    }
    if (!(replay(kept) == rebuilt.state))
      throw CorruptionError(kept.back().seq, "replayed state differs from the engine's");
    ref.game = std::move(rebuilt.state);
    if (ref.game->phase == Phase::Finished) {
      ref.status = RoomStatus::Finished;
    } else {
      open_round(ref, now);
      settle(ref, now, ignored);
    }
  } catch (const std::exception& e) {
    ref.status = RoomStatus::Frozen;
    ref.frozen_reason = e.what();
    ref.game.reset();
  }
}

Outbox RoomManager::handle_text(SessionId session, std::string_view text, Clock::time_point now) {
  Message m;
  try {
    m = decode(text);
  } catch (const ProtocolError& e) {
    return {Outgoing{session, error_message("", "", "bad_request", e.what())}};
  }
  return handle(session, m, now);
}

Outbox RoomManager::handle(SessionId session, const Message& m, Clock::time_point now) {
  auto reply_error = [&](std::string_view reason, std::string_view detail) {
    return Outbox{Outgoing{session, error_message(m.room_code, m.request_id, reason, detail)}};
  };
  if (m.protocol_version != kProtocolVersion)
    return reply_error("unsupported_protocol", fmt::format("server speaks protocol version {}", kProtocolVersion));
  if (!is_client_message(m.type))
    return reply_error("bad_request", fmt::format("'{}' is not a client message", to_string(m.type)));
  auto it = rooms_.find(m.room_code);
  if (it == rooms_.end()) return reply_error("unknown_room", "no room with code '" + m.room_code + "'");
  Room& r = *it->second;
  if (r.status == RoomStatus::Frozen) return reply_error("room_frozen", r.frozen_reason);
  switch (m.type) {
    case MessageType::Join: return handle_join(r, session, m, now);
    case MessageType::SubmitAction: return handle_submit(r, session, m, now);
    case MessageType::SurveyAnswer: return handle_survey(r, session, m);
    default: return reply_error("bad_request", "unexpected message");
  }
}

Outbox RoomManager::handle_join(Room& r, SessionId session, const Message& m, Clock::time_point now) {
  Outbox out;
  auto reply_error = [&](std::string_view reason, std::string_view detail) {
    return Outbox{Outgoing{session, error_message(m.room_code, m.request_id, reason, detail)}};
  };
  if (auto b = bindings_.find(session); b != bindings_.end())
    return reply_error("already_joined", fmt::format("session holds seat {} of room {}", b->second.second, b->second.first));

  Seat* seat = nullptr;
  const std::string token = m.body.value("seat_token", std::string());
  if (!token.empty()) {
    for (auto& s : r.seats)
      if (!s.bot && s.token == token) seat = &s;
    if (!seat) return reply_error("bad_token", "no seat holds that token");
    if (seat->session) bindings_.erase(*seat->session);
  } else {
    std::string name;
    double risk = 0.0;
    try {
      name = m.body.at("display_name").get<std::string>();
      risk = m.body.value("risk_score", 0.0);
    } catch (const nlohmann::json::exception&) {
      return reply_error("bad_request", "join needs a string display_name");
    }
    if (name.empty() || name.size() > 64) return reply_error("bad_request", "display_name must be 1 to 64 characters");
    if (!(risk >= 0.0 && risk <= 1.0)) return reply_error("bad_request", "risk_score must be in [0,1]");
    for (const auto& s : r.seats)
      if (!s.bot && s.filled() && s.display_name == name) return reply_error("duplicate_name", "name already seated");
    if (m.body.contains("seat")) {
      const std::string wanted = m.body.at("seat").is_string() ? m.body.at("seat").get<std::string>() : "";
      seat = r.seat(wanted);
      if (!seat) return reply_error("bad_request", "no seat '" + wanted + "'");
      if (seat->bot) return reply_error("seat_reserved", "seat " + wanted + " is played by a bot");
      if (seat->filled()) return reply_error("seat_taken", "seat " + wanted + " is taken");
    } else {
      for (auto& s : r.seats)
        if (!s.filled()) {
          seat = &s;
          break;
        }
      if (!seat) return reply_error("room_full", "every seat is taken");
    }
    Seat before = *seat;
    seat->display_name = name;
    seat->risk_score = risk;
    seat->token = random_token(32);
    try {
      write_manifest(r);
    } catch (const IoError& e) {
      *seat = before;
      return reply_error("storage_failure", e.what());
    }
  }
  seat->session = session;
  bindings_[session] = {r.code, seat->id};

  Message joined;
  joined.type = MessageType::Joined;
  joined.room_code = r.code;
  joined.request_id = m.request_id;
  joined.body["seat"] = seat->id;
  joined.body["seat_token"] = seat->token;
  joined.body["display_name"] = seat->display_name;
  out.push_back({session, joined});

  const bool resumed = !token.empty();
  const PlayerId seat_id = seat->id;
  if (r.status == RoomStatus::Lobby &&
      std::all_of(r.seats.begin(), r.seats.end(), [](const Seat& s) { return s.filled(); })) {
    start_game(r, now, out);
    return out;
  }
  broadcast_room_state(r, now, out);
  if (resumed && r.status == RoomStatus::InRound) out.push_back({session, round_begin(r, *r.seat(seat_id), now)});
  if (resumed && r.status == RoomStatus::Finished) send_finished(r, session, out);
  return out;
}

Outbox RoomManager::handle_submit(Room& r, SessionId session, const Message& m, Clock::time_point now) {
  auto reply_error = [&](std::string_view reason, std::string_view detail) {
    return Outbox{Outgoing{session, error_message(m.room_code, m.request_id, reason, detail)}};
  };
  auto b = bindings_.find(session);
  if (b == bindings_.end() || b->second.first != r.code) return reply_error("not_joined", "join the room first");
  const PlayerId& id = b->second.second;
  if (r.status != RoomStatus::InRound || !r.game) return reply_error("not_in_round", "no round is open");
  if (m.body.contains("round") && m.body.at("round") != r.game->round)
    return reply_error("not_in_round", fmt::format("round {} is open", r.game->round));
  if (r.pending.contains(id)) return reply_error("already_acted", "one action per round");
  Action action;
  try {
    action = action_from_json(m.body.at("action"));
  } catch (const std::exception& e) {
    return reply_error("bad_request", std::string("unreadable action: ") + e.what());
  }
  const GameState& g = *r.game;
  const auto reason = rejection_reason(g.player(id), g.players, action, g.round);
  r.pending[id] = action;

  Outbox out;
  Message reply;
  reply.room_code = r.code;
  reply.request_id = m.request_id;
  reply.body["round"] = g.round;
  reply.body["action"] = to_json(action);
  if (reason) {
    reply.type = MessageType::ActionRejected;
    reply.body["reason"] = *reason;
  } else {
    reply.type = MessageType::ActionAck;
  }
  out.push_back({session, reply});
  settle(r, now, out);
  return out;
}

Outbox RoomManager::handle_survey(Room& r, SessionId session, const Message& m) {
  auto reply_error = [&](std::string_view reason, std::string_view detail) {
    return Outbox{Outgoing{session, error_message(m.room_code, m.request_id, reason, detail)}};
  };
  auto b = bindings_.find(session);
  if (b == bindings_.end() || b->second.first != r.code) return reply_error("not_joined", "join the room first");
  if (r.status != RoomStatus::Finished || !r.game) return reply_error("not_finished", "the game is still running");
  std::string game_id, item;
  Json value;
  try {
    game_id = m.body.at("game_id").get<std::string>();
    item = m.body.at("item").get<std::string>();
    value = m.body.at("value");
  } catch (const nlohmann::json::exception&) {
    return reply_error("invalid_answer", "survey_answer needs game_id, item and value");
  }
  if (game_id != r.game->game_id) return reply_error("invalid_answer", "unknown game '" + game_id + "'");
  if (std::find(kSurveyItems.begin(), kSurveyItems.end(), item) == kSurveyItems.end())
    return reply_error("invalid_answer", "unknown survey item '" + item + "'");
  if (!value.is_number_integer() || value.get<int>() < 1 || value.get<int>() > 5)
    return reply_error("invalid_answer", "value must be an integer from 1 to 5");

  Json line;
  line["game_id"] = game_id;
  line["seat"] = b->second.second;
  line["item"] = item;
  line["value"] = value;
  try {
    const std::string text = line.dump();
    r.survey->append_lines(std::span<const std::string>(&text, 1));
  } catch (const IoError& e) {
    return reply_error("storage_failure", e.what());
  }
  Message ack;
  ack.type = MessageType::ActionAck;
  ack.room_code = r.code;
  ack.request_id = m.request_id;
  ack.body["survey_item"] = item;
  ack.body["value"] = value;
  return {Outgoing{session, ack}};
}

Outbox RoomManager::disconnect(SessionId session, Clock::time_point now) {
  Outbox out;
  auto b = bindings_.find(session);
  if (b == bindings_.end()) return out;
  auto it = rooms_.find(b->second.first);
  if (it != rooms_.end()) {
    if (Seat* s = it->second->seat(b->second.second); s && s->session == session) s->session.reset();
    bindings_.erase(b);
    broadcast_room_state(*it->second, now, out);
  } else {
    bindings_.erase(b);
  }
  return out;
}

Outbox RoomManager::tick(Clock::time_point now) {
  Outbox out;
  for (auto& [code, r] : rooms_)
    if (r->status == RoomStatus::InRound && r->deadline && now >= *r->deadline) resolve_round(*r, now, out);
  for (auto& [code, r] : rooms_) settle(*r, now, out);
  return out;
}

void RoomManager::start_game(Room& r, Clock::time_point now, Outbox& out) {
  std::vector<PlayerSeed> seeds;
  for (const Seat& s : r.seats) seeds.push_back(PlayerSeed{s.id, s.risk_score});
  Step created = create_game(r.config, seeds, r.code);
  Step begun = begin_round(created.state);
  std::vector<Event> batch = created.events;
  batch.insert(batch.end(), begun.events.begin(), begun.events.end());
  if (!persist(r, batch, out)) return;
  r.game = std::move(begun.state);
  open_round(r, now);
  broadcast_room_state(r, now, out);
  for (const Seat& s : r.seats)
    if (s.session) out.push_back({*s.session, round_begin(r, s, now)});
  settle(r, now, out);
}

void RoomManager::open_round(Room& r, Clock::time_point now) {
  r.status = RoomStatus::InRound;
  r.deadline = now + options_.round_timeout;
  r.pending.clear();
  const GameState& g = *r.game;
  for (const Seat& s : r.seats) {
    const PlayerView view = player_view(g, s.id);
    if (s.bot) {
      agents::BotSource bot(*s.bot, g.rng_seed, s.id);
      r.pending[s.id] = bot.decide(view);
    } else if (view.forced_skip) {
      r.pending[s.id] = Skip{};
    }
  }
}

// Resolves rounds for as long as every seat has already acted.
void RoomManager::settle(Room& r, Clock::time_point now, Outbox& out) {
  while (r.status == RoomStatus::InRound && r.game && r.pending.size() == r.seats.size()) resolve_round(r, now, out);
}

void RoomManager::resolve_round(Room& r, Clock::time_point now, Outbox& out) {
  ActionMap actions = r.pending;
  std::set<PlayerId> timed_out;
  for (const Seat& s : r.seats)
    if (!actions.contains(s.id)) {
      actions[s.id] = Skip{};
      timed_out.insert(s.id);
    }
  const int closed = r.game->round;
  Step resolved = submit_round(*r.game, actions, timed_out);
  std::vector<Event> batch = resolved.events;
  std::optional<Step> begun;
  if (resolved.state.phase != Phase::Finished) {
    r.status = RoomStatus::BetweenRounds;
    begun = begin_round(resolved.state);
    batch.insert(batch.end(), begun->events.begin(), begun->events.end());
  }
  if (!persist(r, batch, out)) return;

  if (begun) {
    r.game = std::move(begun->state);
    open_round(r, now);
  } else {
    r.game = std::move(resolved.state);
    r.status = RoomStatus::Finished;
    r.deadline.reset();
    r.pending.clear();
  }
  for (const Seat& s : r.seats) {
    if (!s.session) continue;
    Message m;
    m.type = MessageType::RoundResult;
    m.room_code = r.code;
    m.body["round"] = closed;
    Json events = Json::array();
    for (const Event& e : batch)
      if (visible_to(e, s.id)) events.push_back(Json::parse(to_json_line(e)));
    m.body["events"] = events;
    m.body["timed_out"] = timed_out.contains(s.id);
    m.body["view"] = to_json(player_view(*r.game, s.id));
    out.push_back({*s.session, m});
    if (r.status == RoomStatus::Finished) send_finished(r, *s.session, out);
    else out.push_back({*s.session, round_begin(r, s, now)});
  }
}

bool RoomManager::persist(Room& r, std::span<const Event> events, Outbox& out) {
  try {
    r.events->append(events);
    return true;
  } catch (const IoError& e) {
    freeze(r, e.what(), out);
    return false;
  }
}

void RoomManager::freeze(Room& r, const std::string& why, Outbox& out) {
  r.status = RoomStatus::Frozen;
  r.frozen_reason = why;
  r.deadline.reset();
  for (const Seat& s : r.seats)
    if (s.session) out.push_back({*s.session, error_message(r.code, "", "storage_failure", why)});
}

Message RoomManager::room_state(const Room& r, Clock::time_point now) const {
  Message m;
  m.type = MessageType::RoomState;
  m.room_code = r.code;
  m.body["status"] = std::string(to_string(r.status));
  Json seats = Json::array();
  for (const Seat& s : r.seats) seats.push_back(seat_json(s));
  m.body["seats"] = seats;
  if (r.game) {
    m.body["game_id"] = r.game->game_id;
    m.body["round"] = r.game->round;
    m.body["state_hash"] = state_hash(*r.game);
    Json acted = Json::array();
    for (const auto& [id, a] : r.pending) acted.push_back(id);
    m.body["acted"] = acted;
  }
  if (r.deadline)
    m.body["deadline_ms"] =
        std::max<std::int64_t>(0, std::chrono::duration_cast<std::chrono::milliseconds>(*r.deadline - now).count());
  return m;
}

void RoomManager::broadcast_room_state(const Room& r, Clock::time_point now, Outbox& out) const {
  const Message m = room_state(r, now);
  for (const Seat& s : r.seats)
    if (s.session) out.push_back({*s.session, m});
}

Message RoomManager::round_begin(const Room& r, const Seat& seat, Clock::time_point now) const {
  Message m;
  m.type = MessageType::RoundBegin;
  m.room_code = r.code;
  m.body["game_id"] = r.game->game_id;
  m.body["round"] = r.game->round;
  m.body["deadline_ms"] =
      r.deadline ? std::max<std::int64_t>(0, std::chrono::duration_cast<std::chrono::milliseconds>(*r.deadline - now).count())
                 : 0;
  m.body["already_acted"] = r.pending.contains(seat.id);
  m.body["view"] = to_json(player_view(*r.game, seat.id));
  return m;
}

void RoomManager::send_finished(const Room& r, SessionId session, Outbox& out) const {
  const GameState& g = *r.game;
  Message over;
  over.type = MessageType::GameOver;
  over.room_code = r.code;
  over.body["game_id"] = g.game_id;
  Json scores;
  for (const PlayerState& p : g.players) scores[p.id] = p.score;
  over.body["scores"] = scores;
  over.body["attack_count"] = g.attack_count;
  over.body["manager_sanction_issuances"] = g.manager_sanction_issuances;
  out.push_back({session, over});

  Message prompt;
  prompt.type = MessageType::SurveyPrompt;
  prompt.room_code = r.code;
  prompt.body["game_id"] = g.game_id;
  Json items = Json::array();
  items.push_back({{"item", "sanction_influence"},
                   {"text", "How much did sanctions influence your decisions?"},
                   {"scale", {1, 5}}});
  items.push_back({{"item", "productivity_detriment"},
                   {"text", "How much did sanctions hurt your productivity?"},
                   {"scale", {1, 5}}});
  prompt.body["items"] = items;
  out.push_back({session, prompt});
}

}  // namespace normgame::server
