#include "normgame/event.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "normgame/error.hpp"

namespace normgame {

namespace {

constexpr std::array<std::string_view, 11> kKindNames{
    "game-created",  "round-started",   "manager-observed", "manager-sanctioned",
    "action-submitted", "action-applied", "action-rejected", "attack",
    "project-banked", "sanction-lifted", "game-over"};

}  // namespace

std::string_view to_string(EventKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == s) return static_cast<EventKind>(i);
  return std::nullopt;
}

std::string to_json_line(const Event& e) {
  Json j;
  j["game_id"] = e.game_id;
  j["round"] = e.round;
  j["seq"] = e.seq;
  j["kind"] = std::string(to_string(e.kind));
  j["payload"] = e.payload;
  return j.dump();
}

Event parse_json_line(std::string_view line, std::uint64_t line_no) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::parse_error& err) {
    throw CorruptionError(line_no, std::string("unparseable line: ") + err.what());
  }
  if (!j.is_object() || j.size() != 5 || !j.contains("game_id") || !j.contains("round") ||
      !j.contains("seq") || !j.contains("kind") || !j.contains("payload"))
    throw CorruptionError(line_no, "event must have exactly {game_id, round, seq, kind, payload}");
  Event e;
  try {
    e.game_id = j.at("game_id").get<std::string>();
    e.round = j.at("round").get<int>();
    e.seq = j.at("seq").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& err) {
    throw CorruptionError(line_no, err.what());
  }
  const Json& kind = j.at("kind");
  auto k = kind.is_string() ? parse_event_kind(kind.get<std::string>()) : std::nullopt;
  if (!k) throw CorruptionError(e.seq, "unknown event kind");
  e.kind = *k;
  e.payload = j.at("payload");
  if (!e.payload.is_object()) throw CorruptionError(e.seq, "payload must be an object");
  return e;
}

std::string to_jsonl(const EventLog& log) {
  std::string out;
  for (const Event& e : log) {
    out += to_json_line(e);
    out += '\n';
  }
  return out;
}

EventLog parse_jsonl(std::string_view text) {
  EventLog log;
  std::uint64_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (!line.empty()) log.push_back(parse_json_line(line, line_no));
    pos = end + 1;
  }
  return log;
}

EventLog read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open event log '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_jsonl(buf.str());
}

void write_event_log(const std::filesystem::path& path, const EventLog& log) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << to_jsonl(log);
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "': " + ec.message());
}

}  // namespace normgame
