#include "normgame/types.hpp"

#include <fmt/format.h>

namespace normgame {

std::string_view to_string(Color c) {
  switch (c) {
    case Color::Blue: return "blue";
    case Color::Red: return "red";
    case Color::Yellow: return "yellow";
  }
  return "?";
}

std::optional<Color> parse_color(std::string_view s) {
  for (Color c : kColors)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::string_view to_string(AttackKind k) {
  if (k == AttackKind::Black) return "black";
  return to_string(static_cast<Color>(static_cast<std::uint8_t>(k)));
}

std::optional<AttackKind> parse_attack_kind(std::string_view s) {
  if (s == "black") return AttackKind::Black;
  if (auto c = parse_color(s)) return colored(*c);
  return std::nullopt;
}

std::string_view to_string(ProjectSize s) {
  switch (s) {
    case ProjectSize::Small: return "small";
    case ProjectSize::Medium: return "medium";
    case ProjectSize::Large: return "large";
  }
  return "?";
}

std::optional<ProjectSize> parse_project_size(std::string_view s) {
  for (ProjectSize p : kProjectSizes)
    if (to_string(p) == s) return p;
  return std::nullopt;
}

std::string_view to_string(Regime r) { return r == Regime::Individual ? "individual" : "group"; }

std::optional<Regime> parse_regime(std::string_view s) {
  if (s == "individual") return Regime::Individual;
  if (s == "group") return Regime::Group;
  return std::nullopt;
}

std::string describe(const Action& a) {
  struct Visitor {
    std::string operator()(const CompleteProjectTask& t) const {
      return fmt::format("project_task({}, {})", to_string(t.size), to_string(t.color));
    }
    std::string operator()(const CompleteImmunityTask& t) const {
      return fmt::format("immunity_task({})", to_string(t.color));
    }
    std::string operator()(const PeerSanction& t) const {
      return fmt::format("peer_sanction({})", t.target);
    }
    std::string operator()(const Skip&) const { return "skip"; }
  };
  return std::visit(Visitor{}, a);
}

}  // namespace normgame
