#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "normgame/json_io.hpp"

namespace normgame::server {

inline constexpr int kProtocolVersion = 1;

enum class MessageType : std::uint8_t {
  Join,
  Joined,
  RoomState,
  RoundBegin,
  SubmitAction,
  ActionAck,
  ActionRejected,
  RoundResult,
  GameOver,
  SurveyPrompt,
  SurveyAnswer,
  Error,
};

std::string_view to_string(MessageType t);
std::optional<MessageType> parse_message_type(std::string_view s);
// join, submit_action and survey_answer.
bool is_client_message(MessageType t);

struct Message {
  MessageType type = MessageType::Error;
  std::string room_code;
  // Chosen by the client and echoed on the direct reply; empty on broadcasts.
  std::string request_id;
  int protocol_version = kProtocolVersion;
  Json body = Json::object();

  friend bool operator==(const Message&, const Message&) = default;
};

Json to_json(const Message& m);
std::string encode(const Message& m);
// Throws ProtocolError on malformed JSON, unknown type or missing fields.
Message decode(std::string_view text);

Message error_message(std::string room_code, std::string request_id, std::string_view reason,
                      std::string_view detail);

}  // namespace normgame::server
