#pragma once

#include "json.hpp"
#include "normgame/config.hpp"
#include "normgame/player.hpp"
#include "normgame/types.hpp"

namespace normgame {

// Insertion-ordered so serialized bytes follow field declaration order.
using Json = nlohmann::ordered_json;

Json to_json(ColorSet s);
ColorSet color_set_from_json(const Json& j);

Json to_json(const Action& a);
// Throws InputError on malformed input.
Action action_from_json(const Json& j);

Json to_json(const GameConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
GameConfig config_from_json(const Json& j);

Json to_json(const SanctionStatus& s);
Json to_json(const PlayerState& p);

}  // namespace normgame
