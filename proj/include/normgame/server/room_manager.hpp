#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "normgame/agents/policy.hpp"
#include "normgame/config.hpp"
#include "normgame/engine.hpp"
#include "normgame/server/event_sink.hpp"
#include "normgame/server/protocol.hpp"

namespace normgame::server {

using SessionId = std::uint64_t;
using Clock = std::chrono::steady_clock;

struct Outgoing {
  SessionId session = 0;
  Message message;
};
using Outbox = std::vector<Outgoing>;

enum class RoomStatus : std::uint8_t { Lobby, InRound, BetweenRounds, Finished, Frozen };
std::string_view to_string(RoomStatus s);

inline constexpr std::string_view kRoomCodeAlphabet = "ABCDEFGHJKMNPQRSTUVWXYZ23456789";
bool is_valid_room_code(std::string_view code);

inline const std::vector<std::string> kSurveyItems{"sanction_influence", "productivity_detriment"};

struct Seat {
  // Engine player id: P1..Pn.
  PlayerId id;
  std::optional<agents::PolicySpec> bot;
  std::string display_name;
  std::string token;
  double risk_score = 0.0;
  std::optional<SessionId> session;

  bool filled() const { return bot.has_value() || !token.empty(); }
};

struct RoomSetup {
  // Empty: a fresh code is generated.
  std::string room_code;
  GameConfig config;
  // Keyed by seat id.
  std::map<PlayerId, agents::PolicySpec> bots;
};

// {"config": {...}, "bots": {"P3": {...}}, "room_code": "ABC234"}, or a bare GameConfig.
RoomSetup room_setup_from_json(const Json& j);

struct ServerOptions {
  std::filesystem::path storage;
  std::chrono::milliseconds round_timeout{30000};
  SinkFactory sinks = default_sink_factory();
};

struct RoomSnapshot {
  std::string code;
  RoomStatus status = RoomStatus::Lobby;
  std::vector<Seat> seats;
  std::optional<GameState> game;
  std::optional<Clock::time_point> deadline;
  std::set<PlayerId> acted;
  std::string frozen_reason;
};

// FNV-1a of the serialized GameState, as 16 hex digits.
std::string state_hash(const GameState& s);

// Owns every room. Not thread-safe: one caller serializes all messages, which
// makes each room's history linearizable. Every engine event reaches the room's
// log before any message depending on it is returned.
class RoomManager {
 public:
  explicit RoomManager(ServerOptions options);
  ~RoomManager();
  RoomManager(const RoomManager&) = delete;
  RoomManager& operator=(const RoomManager&) = delete;

  // Persists the manifest. Throws ConfigError for a bad setup or a taken code.
  std::string create_room(const RoomSetup& setup, Clock::time_point now);

  // Restores every room found under storage. A room whose log fails
  // validation is loaded frozen.
  std::vector<std::string> recover(Clock::time_point now);

  Outbox handle(SessionId session, const Message& message, Clock::time_point now);
  // Decode errors are answered with an error message to `session`.
  Outbox handle_text(SessionId session, std::string_view text, Clock::time_point now);
  Outbox disconnect(SessionId session, Clock::time_point now);
  // Resolves every round whose deadline has passed.
  Outbox tick(Clock::time_point now);

  bool has_room(const std::string& code) const;
  std::vector<std::string> room_codes() const;
  // Throws NotFound.
  RoomSnapshot snapshot(const std::string& code) const;
  std::filesystem::path room_dir(const std::string& code) const;

 private:
  struct Room;
  Room& room(const std::string& code);

  Outbox handle_join(Room& r, SessionId session, const Message& m, Clock::time_point now);
  Outbox handle_submit(Room& r, SessionId session, const Message& m, Clock::time_point now);
  Outbox handle_survey(Room& r, SessionId session, const Message& m);

  void start_game(Room& r, Clock::time_point now, Outbox& out);
  void open_round(Room& r, Clock::time_point now);
  void resolve_round(Room& r, Clock::time_point now, Outbox& out);
  void settle(Room& r, Clock::time_point now, Outbox& out);
  bool persist(Room& r, std::span<const Event> events, Outbox& out);
  void freeze(Room& r, const std::string& why, Outbox& out);
  void write_manifest(const Room& r) const;
  void load_room(const std::filesystem::path& dir, Clock::time_point now);

  void broadcast_room_state(const Room& r, Clock::time_point now, Outbox& out) const;
  Message room_state(const Room& r, Clock::time_point now) const;
  Message round_begin(const Room& r, const Seat& seat, Clock::time_point now) const;
  void send_finished(const Room& r, SessionId session, Outbox& out) const;

  ServerOptions options_;
  std::map<std::string, std::unique_ptr<Room>> rooms_;
  std::map<SessionId, std::pair<std::string, PlayerId>> bindings_;
};

}  // namespace normgame::server
