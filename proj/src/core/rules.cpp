#include "normgame/rules.hpp"

#include <algorithm>
#include <array>

#include "normgame/error.hpp"

namespace normgame {

Compliance compliance_status(const PlayerState& player, int round) {
  return overdue_colors(player, round).empty() ? Compliance::Compliant : Compliance::Noncompliant;
}

ColorSet overdue_colors(const PlayerState& player, int round) {
  ColorSet out;
  for (const ImmunitySlot& s : player.slots)
    if (s.loss && round > s.loss->deadline_round) out.insert(s.color);
  return out;
}

std::optional<std::string> rejection_reason(const PlayerState& player,
                                            std::span<const PlayerState> peers,
                                            const Action& action, int round) {
  const bool sanctioned = is_sanctioned(player.sanction);
  if (std::holds_alternative<Skip>(action)) {
    if (sanctioned) return std::nullopt;
    return "not_sanctioned";
  }
  if (sanctioned) return "sanctioned";

  if (const auto* t = std::get_if<CompleteProjectTask>(&action)) {
    const Project& p = player.project(t->size);
    if (!p.required.contains(t->color)) return "task_not_required";
    if (p.completed.contains(t->color)) return "task_already_complete";
    if (!player.slot(t->color).capability_available) return "capability_lost";
    return std::nullopt;
  }
  if (const auto* t = std::get_if<CompleteImmunityTask>(&action)) {
    if (player.slot(t->color).held()) return "immunity_held";
    return std::nullopt;
  }
  const auto& ps = std::get<PeerSanction>(action);
  if (ps.target == player.id) return "self_target";
  auto it = std::find_if(peers.begin(), peers.end(),
                         [&](const PlayerState& p) { return p.id == ps.target; });
  if (it == peers.end()) return "unknown_target";
  if (compliance_status(*it, round) == Compliance::Compliant) return "target_compliant";
  return std::nullopt;
}

bool is_action_enabled(const PlayerState& player, std::span<const PlayerState> peers,
                       const Action& action, int round) {
  return !rejection_reason(player, peers, action, round).has_value();
}

PlayerState apply_attack(PlayerState player, AttackKind kind, int round, const GameConfig& config) {
  for (Color c : affected_colors(kind).to_vector()) {
    ImmunitySlot& slot = player.slot(c);
    if (slot.held()) {
      slot.loss = ImmunityLoss{round, round + config.immunity_deadline};
    } else if (slot.capability_available) {
      slot.capability_available = false;
      // Unbanked progress on this color is lost with the capability.
      for (Project& p : player.projects) p.completed.erase(c);
    }
  }
  return player;
}

PlayerState apply_immunity_task(PlayerState player, Color color, int /*round*/) {
  ImmunitySlot& slot = player.slot(color);
  if (slot.held())
    throw InvalidAction("immunity_task(" + std::string(to_string(color)) + "): immunity is held");
  slot.loss.reset();
  slot.capability_available = true;
  return player;
}

ColorSet roll_required_tasks(int count, Rng& rng) {
  // Subsets of each cardinality, enumerated in color order.
  static constexpr std::array<std::uint8_t, 3> kSingles{0b001, 0b010, 0b100};
  static constexpr std::array<std::uint8_t, 3> kPairs{0b011, 0b101, 0b110};
  std::uint8_t bits = 0b111;
  if (count == 1) bits = kSingles[rng.below(3)];
  else if (count == 2) bits = kPairs[rng.below(3)];
  ColorSet out;
  for (Color c : kColors)
    if ((bits >> index_of(c)) & 1U) out.insert(c);
  return out;
}

ProjectTaskResult apply_project_task(PlayerState player, ProjectSize size, Color color, Rng& rng,
                                     const GameConfig& config) {
  const Action action = CompleteProjectTask{size, color};
  if (auto why = rejection_reason(player, {}, action, 0))
    throw InvalidAction(describe(action) + ": " + *why);
  Project& p = player.project(size);
  p.completed.insert(color);
  int banked = 0;
  if (p.completed == p.required) {
    banked = config.score_for(size);
    player.score += banked;
    p.required = roll_required_tasks(config.tasks_for(size), rng);
    p.completed = ColorSet{};
  }
  return {std::move(player), banked};
}

std::optional<AttackKind> sample_attack(Rng& rng, const GameConfig& config) {
  if (!(rng.uniform01() < config.attack_probability)) return std::nullopt;
  double total = 0.0;
  for (double w : config.attack_kind_weights) total += w;
  double x = rng.uniform01() * total;
  for (std::size_t i = 0; i < config.attack_kind_weights.size(); ++i) {
    const double w = config.attack_kind_weights[i];
    if (w <= 0.0) continue;
    if (x < w) return static_cast<AttackKind>(i);
    x -= w;
  }
  // Floating-point residue lands on the last positive weight.
  for (std::size_t i = config.attack_kind_weights.size(); i-- > 0;)
    if (config.attack_kind_weights[i] > 0.0) return static_cast<AttackKind>(i);
  return std::nullopt;
}

}  // namespace normgame
