#include "normgame/agents/policy.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "normgame/rules.hpp"

namespace normgame::agents {

namespace {

constexpr std::array<std::string_view, 7> kKindNames{
    "compliant-first", "deadline-procrastinator", "negligent", "greedy-score",
    "random",          "risk-weighted",           "always-skip"};

struct TaskChoice {
  ProjectSize size;
  Color color;
};

std::vector<TaskChoice> enabled_project_tasks(const PlayerState& self) {
  std::vector<TaskChoice> out;
  for (const Project& p : self.projects)
    for (Color c : p.remaining().to_vector())
      if (self.slot(c).capability_available) out.push_back({p.size, c});
  return out;
}

std::optional<Action> highest_value_task(const PlayerView& view) {
  std::optional<TaskChoice> best;
  for (const TaskChoice& t : enabled_project_tasks(view.self)) {
    if (!best || view.rules.project_scores[index_of(t.size)] > view.rules.project_scores[index_of(best->size)])
      best = t;
  }
  if (!best) return std::nullopt;
  return CompleteProjectTask{best->size, best->color};
}

std::optional<Action> best_points_per_task(const PlayerView& view) {
  std::optional<TaskChoice> best;
  double best_rate = -1.0;
  for (const TaskChoice& t : enabled_project_tasks(view.self)) {
    const auto remaining = static_cast<double>(view.self.project(t.size).remaining().size());
    const double rate = view.rules.project_scores[index_of(t.size)] / remaining;
    if (rate > best_rate) {
      best_rate = rate;
      best = t;
    }
  }
  if (!best) return std::nullopt;
  return CompleteProjectTask{best->size, best->color};
}

Action repair(Color c) { return CompleteImmunityTask{c}; }

// Work if possible, otherwise repair a lost capability, which is what blocks
// work; an unsanctioned player always has one of the two.
Action work_or_repair(const PlayerView& view, std::optional<Action> work) {
  if (work) return *work;
  auto order = repair_order(view.self);
  for (Color c : order)
    if (!view.self.slot(c).capability_available) return repair(c);
  if (!order.empty()) return repair(order.front());
  return Skip{};
}

double elapsed_fraction(const ImmunitySlot& slot, int round) {
  const auto& loss = *slot.loss;
  const int window = loss.deadline_round - loss.lost_at_round;
  if (window <= 0) return 1.0;
  return std::clamp(static_cast<double>(round - loss.lost_at_round) / window, 0.0, 1.0);
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

std::string_view to_string(PolicyKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<PolicyKind> parse_policy_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == s) return static_cast<PolicyKind>(i);
  return std::nullopt;
}

void PolicySpec::validate() const {
  if (!in_unit(theta)) throw ConfigError("policy theta must be in [0,1]");
  if (!in_unit(enforce)) throw ConfigError("policy enforce must be in [0,1]");
}

Json to_json(const PolicySpec& spec) {
  Json j;
  j["kind"] = std::string(to_string(spec.kind));
  if (spec.kind == PolicyKind::RiskWeighted) {
    j["theta"] = spec.theta;
    j["enforce"] = spec.enforce;
  }
  j["seed_offset"] = spec.seed_offset;
  return j;
}

PolicySpec policy_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("policy spec needs a string 'kind'");
  static const std::set<std::string> kKnown{"kind", "theta", "enforce", "seed_offset"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kKnown.contains(it.key())) throw ConfigError("unknown policy key '" + it.key() + "'");
  PolicySpec spec;
  auto kind = parse_policy_kind(j.at("kind").get<std::string>());
  if (!kind) throw ConfigError("unknown policy kind '" + j.at("kind").get<std::string>() + "'");
  spec.kind = *kind;
  try {
    if (j.contains("theta")) spec.theta = j.at("theta").get<double>();
    if (j.contains("enforce")) spec.enforce = j.at("enforce").get<double>();
    if (j.contains("seed_offset")) spec.seed_offset = j.at("seed_offset").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("policy spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

double repair_probability(double theta, double elapsed) {
  // Both factors are nonincreasing in theta: 1 at theta = 0, 0 at theta = 1.
  return (1.0 - theta) * (1.0 - theta * (1.0 - elapsed));
}

std::vector<Color> repair_order(const PlayerState& self) {
  std::vector<Color> lost;
  for (const ImmunitySlot& s : self.slots)
    if (!s.held()) lost.push_back(s.color);
  std::stable_sort(lost.begin(), lost.end(), [&](Color a, Color b) {
    const ImmunitySlot& sa = self.slot(a);
    const ImmunitySlot& sb = self.slot(b);
    if (sa.loss->deadline_round != sb.loss->deadline_round)
      return sa.loss->deadline_round < sb.loss->deadline_round;
    return !sa.capability_available && sb.capability_available;
  });
  return lost;
}

std::vector<Action> enabled_actions(const PlayerView& view) {
  std::vector<Action> out;
  if (is_sanctioned(view.self.sanction)) return out;
  for (const TaskChoice& t : enabled_project_tasks(view.self)) out.push_back(CompleteProjectTask{t.size, t.color});
  for (const ImmunitySlot& s : view.self.slots)
    if (!s.held()) out.push_back(CompleteImmunityTask{s.color});
  for (const PeerView& p : view.peers)
    if (p.compliance == Compliance::Noncompliant) out.push_back(PeerSanction{p.id});
  return out;
}

Action decide(const PolicySpec& spec, const PlayerView& view, Rng& rng) {
  const PlayerState& self = view.self;
  if (spec.kind == PolicyKind::AlwaysSkip || is_sanctioned(self.sanction)) return Skip{};
  const auto order = repair_order(self);

  switch (spec.kind) {
    case PolicyKind::CompliantFirst:
      if (!order.empty()) return repair(order.front());
      return work_or_repair(view, highest_value_task(view));

    case PolicyKind::DeadlineProcrastinator:
      for (Color c : order)
        if (view.round >= self.slot(c).loss->deadline_round) return repair(c);
      return work_or_repair(view, highest_value_task(view));

    case PolicyKind::Negligent:
      for (Color c : order)
        if (!self.slot(c).capability_available) return repair(c);
      return work_or_repair(view, highest_value_task(view));

    case PolicyKind::GreedyScore:
      return work_or_repair(view, best_points_per_task(view));

    case PolicyKind::Random: {
      auto options = enabled_actions(view);
      if (options.empty()) return Skip{};
      return options[rng.below(options.size())];
    }

    case PolicyKind::RiskWeighted: {
      if (spec.enforce > 0.0) {
        for (const PeerView& p : view.peers) {
          if (p.compliance != Compliance::Noncompliant) continue;
          if (rng.uniform01() < spec.enforce) return PeerSanction{p.id};
          break;
        }
      }
      for (Color c : order) {
        const double p = repair_probability(spec.theta, elapsed_fraction(self.slot(c), view.round));
        if (p >= 1.0) return repair(c);
        if (p > 0.0 && rng.uniform01() < p) return repair(c);
      }
      return work_or_repair(view, highest_value_task(view));
    }

    case PolicyKind::AlwaysSkip: break;
  }
  return Skip{};
}

Rng policy_rng(std::uint64_t game_seed, const PlayerId& player, std::int64_t seed_offset, int round) {
  return Rng::derive(game_seed, {static_cast<std::uint64_t>(Stream::Policy), stable_hash(0, player.c_str()),
                                 static_cast<std::uint64_t>(seed_offset), static_cast<std::uint64_t>(round)});
}

Action BotSource::decide(const PlayerView& view) {
  Rng rng = policy_rng(game_seed_, player_, spec_.seed_offset, view.round);
  return agents::decide(spec_, view, rng);
}

}  // namespace normgame::agents
