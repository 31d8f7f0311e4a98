#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "normgame/engine.hpp"
#include "normgame/json_io.hpp"
#include "normgame/rng.hpp"

namespace normgame::agents {

enum class PolicyKind : std::uint8_t {
  CompliantFirst,
  DeadlineProcrastinator,
  Negligent,
  GreedyScore,
  Random,
  RiskWeighted,
  AlwaysSkip,
};

std::string_view to_string(PolicyKind k);
std::optional<PolicyKind> parse_policy_kind(std::string_view s);

struct PolicySpec {
  PolicyKind kind = PolicyKind::CompliantFirst;
  // risk-weighted only: risk appetite and peer-enforcement probability.
  double theta = 0.0;
  double enforce = 0.0;
  std::int64_t seed_offset = 0;

  void validate() const;
  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

Json to_json(const PolicySpec& spec);
// {"kind": "risk-weighted", "theta": 0.5, "enforce": 0.1, "seed_offset": 0}
PolicySpec policy_from_json(const Json& j);

// Probability that a risk-weighted bot repairs a lost immunity now.
// `elapsed` is the fraction of the deadline window already used, in [0, 1].
double repair_probability(double theta, double elapsed);

// Lost colors by (deadline round, capability lost first, color order).
std::vector<Color> repair_order(const PlayerState& self);

// Every non-Skip action currently enabled for the viewer.
std::vector<Action> enabled_actions(const PlayerView& view);

// Never returns an action the engine would reject, except Skip from
// always-skip while unsanctioned.
Action decide(const PolicySpec& spec, const PlayerView& view, Rng& rng);

// Per-decision stream keyed by (game seed, player, seed offset, round).
Rng policy_rng(std::uint64_t game_seed, const PlayerId& player, std::int64_t seed_offset, int round);

class BotSource final : public ActionSource {
 public:
  BotSource(PolicySpec spec, std::uint64_t game_seed, PlayerId player)
      : spec_(spec), game_seed_(game_seed), player_(std::move(player)) {}

  Action decide(const PlayerView& view) override;
  const PolicySpec& spec() const { return spec_; }

 private:
  PolicySpec spec_;
  std::uint64_t game_seed_;
  PlayerId player_;
};

}  // namespace normgame::agents
