#include "normgame/json_io.hpp"

#include <set>
#include <string>

#include "normgame/error.hpp"

namespace normgame {

namespace {

template <class T>
T get_or_throw(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("field '") + key + "': " + e.what());
  }
}

Color color_from(const Json& j) {
  if (!j.is_string()) throw InputError("color must be a string");
  auto c = parse_color(j.get<std::string>());
  if (!c) throw InputError("unknown color '" + j.get<std::string>() + "'");
  return *c;
}

template <std::size_t N, class T>
void read_sized(const Json& j, const char* key, std::array<T, N>& out,
                const std::array<const char*, N>& names) {
  if (!j.contains(key)) return;
  const Json& obj = j.at(key);
  if (!obj.is_object()) throw ConfigError(std::string(key) + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    std::size_t i = 0;
    while (i < N && it.key() != names[i]) ++i;
    if (i == N) throw ConfigError(std::string(key) + ": unknown key '" + it.key() + "'");
    if (!it.value().is_number()) throw ConfigError(std::string(key) + "." + it.key() + " must be a number");
    out[i] = it.value().get<T>();
  }
}

constexpr std::array<const char*, 3> kSizeNames{"small", "medium", "large"};
constexpr std::array<const char*, 4> kKindNames{"blue", "red", "yellow", "black"};

}  // namespace

Json to_json(ColorSet s) {
  Json out = Json::array();
  for (Color c : s.to_vector()) out.push_back(std::string(to_string(c)));
  return out;
}

ColorSet color_set_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("color set must be an array");
  ColorSet out;
  for (const Json& e : j) {
    Color c = color_from(e);
    if (out.contains(c)) throw InputError("duplicate color in set");
    out.insert(c);
  }
  return out;
}

Json to_json(const Action& a) {
  Json j;
  if (const auto* t = std::get_if<CompleteProjectTask>(&a)) {
    j["type"] = "project_task";
    j["size"] = std::string(to_string(t->size));
    j["color"] = std::string(to_string(t->color));
  } else if (const auto* t = std::get_if<CompleteImmunityTask>(&a)) {
    j["type"] = "immunity_task";
    j["color"] = std::string(to_string(t->color));
  } else if (const auto* t = std::get_if<PeerSanction>(&a)) {
    j["type"] = "peer_sanction";
    j["target"] = t->target;
  } else {
    j["type"] = "skip";
  }
  return j;
}

Action action_from_json(const Json& j) {
  const auto type = get_or_throw<std::string>(j, "type");
  if (type == "project_task") {
    auto size = parse_project_size(get_or_throw<std::string>(j, "size"));
    if (!size) throw InputError("unknown project size");
    return CompleteProjectTask{*size, color_from(j.at("color"))};
  }
  if (type == "immunity_task") {
    if (!j.contains("color")) throw InputError("missing field 'color'");
    return CompleteImmunityTask{color_from(j.at("color"))};
  }
  if (type == "peer_sanction") return PeerSanction{get_or_throw<std::string>(j, "target")};
  if (type == "skip") return Skip{};
  throw InputError("unknown action type '" + type + "'");
}

Json to_json(const GameConfig& c) {
  Json j;
  j["rounds"] = c.rounds;
  j["attack_probability"] = c.attack_probability;
  j["manager_observability"] = c.manager_observability;
  j["immunity_deadline"] = c.immunity_deadline;
  Json scores, counts, weights;
  for (std::size_t i = 0; i < 3; ++i) {
    scores[kSizeNames[i]] = c.project_scores[i];
    counts[kSizeNames[i]] = c.project_task_counts[i];
  }
  for (std::size_t i = 0; i < 4; ++i) weights[kKindNames[i]] = c.attack_kind_weights[i];
  j["project_scores"] = scores;
  j["project_task_counts"] = counts;
  j["sanction_rounds_per_violation"] = c.sanction_rounds_per_violation;
  j["peer_sanction_duration"] = c.peer_sanction_duration;
  j["attack_kind_weights"] = weights;
  j["regime"] = std::string(to_string(c.regime));
  j["seed"] = c.seed;
  j["player_count"] = c.player_count;
  return j;
}

GameConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("game config must be a JSON object");
  static const std::set<std::string> kKnown{
      "rounds",          "attack_probability",  "manager_observability",
      "immunity_deadline", "project_scores",    "project_task_counts",
      "sanction_rounds_per_violation", "peer_sanction_duration", "attack_kind_weights",
      "regime",          "seed",                "player_count"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kKnown.contains(it.key())) throw ConfigError("unknown game config key '" + it.key() + "'");

  GameConfig c;
  try {
    if (j.contains("rounds")) c.rounds = j.at("rounds").get<int>();
    if (j.contains("attack_probability")) c.attack_probability = j.at("attack_probability").get<double>();
    if (j.contains("manager_observability"))
      c.manager_observability = j.at("manager_observability").get<double>();
    if (j.contains("immunity_deadline")) c.immunity_deadline = j.at("immunity_deadline").get<int>();
    if (j.contains("sanction_rounds_per_violation"))
      c.sanction_rounds_per_violation = j.at("sanction_rounds_per_violation").get<int>();
    if (j.contains("peer_sanction_duration"))
      c.peer_sanction_duration = j.at("peer_sanction_duration").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("player_count")) c.player_count = j.at("player_count").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("game config: ") + e.what());
  }
  if (j.contains("regime")) {
    if (!j.at("regime").is_string()) throw ConfigError("regime must be a string");
    auto r = parse_regime(j.at("regime").get<std::string>());
    if (!r) throw ConfigError("unknown regime '" + j.at("regime").get<std::string>() + "'");
    c.regime = *r;
  }
  read_sized(j, "project_scores", c.project_scores, kSizeNames);
  read_sized(j, "project_task_counts", c.project_task_counts, kSizeNames);
  read_sized(j, "attack_kind_weights", c.attack_kind_weights, kKindNames);
  c.validate();
  return c;
}

Json to_json(const SanctionStatus& s) {
  Json j;
  if (const auto* m = std::get_if<ManagerSanction>(&s)) {
    j["kind"] = "manager";
    j["rounds_remaining"] = m->rounds_remaining;
    j["restore"] = to_json(m->restore);
    j["bystander"] = m->bystander;
  } else if (const auto* p = std::get_if<PeerSanctionStatus>(&s)) {
    j["kind"] = "peer";
    j["rounds_remaining"] = p->rounds_remaining;
  } else {
    j["kind"] = "none";
  }
  return j;
}

Json to_json(const PlayerState& p) {
  Json j;
  j["id"] = p.id;
  j["score"] = p.score;
  j["risk_score"] = p.risk_score;
  j["sanction"] = to_json(p.sanction);
  Json slots;
  for (const ImmunitySlot& s : p.slots) {
    Json e;
    e["held"] = s.held();
    if (s.loss) {
      e["lost_at_round"] = s.loss->lost_at_round;
      e["deadline_round"] = s.loss->deadline_round;
    }
    e["capability_available"] = s.capability_available;
    slots[std::string(to_string(s.color))] = e;
  }
  j["slots"] = slots;
  Json projects;
  for (const Project& pr : p.projects) {
    Json e;
    e["required"] = to_json(pr.required);
    e["completed"] = to_json(pr.completed);
    projects[std::string(to_string(pr.size))] = e;
  }
  j["projects"] = projects;
  return j;
}

}  // namespace normgame
