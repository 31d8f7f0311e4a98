#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "normgame/json_io.hpp"

namespace normgame {

enum class EventKind : std::uint8_t {
  GameCreated,
  RoundStarted,
  ManagerObserved,
  ManagerSanctioned,
  ActionSubmitted,
  ActionApplied,
  ActionRejected,
  Attack,
  ProjectBanked,
  SanctionLifted,
  GameOver,
};

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

// One immutable entry of a game's append-only log.
struct Event {
  std::string game_id;
  int round = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::GameCreated;
  Json payload = Json::object();

  friend bool operator==(const Event&, const Event&) = default;
};

using EventLog = std::vector<Event>;

// {game_id, round, seq, kind, payload} on a single line, no trailing newline.
std::string to_json_line(const Event& e);
// `line_no` only feeds the diagnostic. Throws CorruptionError.
Event parse_json_line(std::string_view line, std::uint64_t line_no = 0);

std::string to_jsonl(const EventLog& log);
EventLog parse_jsonl(std::string_view text);

EventLog read_event_log(const std::filesystem::path& path);
// Atomic: writes a sibling temp file, then renames over `path`.
void write_event_log(const std::filesystem::path& path, const EventLog& log);

}  // namespace normgame
