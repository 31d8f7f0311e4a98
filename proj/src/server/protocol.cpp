#include "normgame/server/protocol.hpp"

#include <array>

#include "normgame/error.hpp"

namespace normgame::server {

namespace {

constexpr std::array<std::string_view, 12> kTypeNames{
    "join",          "joined",       "room_state",    "round_begin",   "submit_action", "action_ack",
    "action_rejected", "round_result", "game_over",   "survey_prompt", "survey_answer", "error"};

}  // namespace

std::string_view to_string(MessageType t) { return kTypeNames[static_cast<std::size_t>(t)]; }

std::optional<MessageType> parse_message_type(std::string_view s) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i)
    if (kTypeNames[i] == s) return static_cast<MessageType>(i);
  return std::nullopt;
}

bool is_client_message(MessageType t) {
  return t == MessageType::Join || t == MessageType::SubmitAction || t == MessageType::SurveyAnswer;
}

Json to_json(const Message& m) {
  Json j;
  j["type"] = std::string(to_string(m.type));
  j["room_code"] = m.room_code;
  j["request_id"] = m.request_id;
  j["protocol_version"] = m.protocol_version;
  j["body"] = m.body;
  return j;
}

std::string encode(const Message& m) { return to_json(m).dump(); }

Message decode(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  Message m;
  try {
    const auto type = j.at("type").get<std::string>();
    auto parsed = parse_message_type(type);
    if (!parsed) throw ProtocolError("unknown message type '" + type + "'");
    m.type = *parsed;
    m.protocol_version = j.at("protocol_version").get<int>();
    m.room_code = j.value("room_code", std::string());
    m.request_id = j.value("request_id", std::string());
    if (j.contains("body")) m.body = j.at("body");
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("bad message envelope: ") + e.what());
  }
  if (!m.body.is_object()) throw ProtocolError("message body must be an object");
  if (is_client_message(m.type)) {
    if (m.room_code.empty()) throw ProtocolError("client messages must carry room_code");
    if (m.request_id.empty()) throw ProtocolError("client messages must carry request_id");
  }
  return m;
}

Message error_message(std::string room_code, std::string request_id, std::string_view reason,
                      std::string_view detail) {
  Message m;
  m.type = MessageType::Error;
  m.room_code = std::move(room_code);
  m.request_id = std::move(request_id);
  m.body["reason"] = std::string(reason);
  m.body["message"] = std::string(detail);
  return m;
}

}  // namespace normgame::server
