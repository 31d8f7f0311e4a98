#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace normgame {

enum class Color : std::uint8_t { Blue = 0, Red = 1, Yellow = 2 };

inline constexpr std::array<Color, 3> kColors{Color::Blue, Color::Red, Color::Yellow};

constexpr std::size_t index_of(Color c) { return static_cast<std::size_t>(c); }

std::string_view to_string(Color c);
std::optional<Color> parse_color(std::string_view s);

// Small value set over the three colors, iterated in kColors order.
class ColorSet {
 public:
  constexpr ColorSet() = default;
  constexpr ColorSet(std::initializer_list<Color> colors) {
    for (Color c : colors) insert(c);
  }

  constexpr bool contains(Color c) const { return (bits_ >> index_of(c)) & 1U; }
  constexpr void insert(Color c) { bits_ |= static_cast<std::uint8_t>(1U << index_of(c)); }
  constexpr void erase(Color c) { bits_ &= static_cast<std::uint8_t>(~(1U << index_of(c))); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const {
    return ((bits_ >> 0) & 1U) + ((bits_ >> 1) & 1U) + ((bits_ >> 2) & 1U);
  }
  constexpr bool subset_of(ColorSet other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr ColorSet minus(ColorSet other) const {
    ColorSet r;
    r.bits_ = static_cast<std::uint8_t>(bits_ & ~other.bits_);
    return r;
  }
  std::vector<Color> to_vector() const {
    std::vector<Color> out;
    for (Color c : kColors)
      if (contains(c)) out.push_back(c);
    return out;
  }
  constexpr std::uint8_t bits() const { return bits_; }

  friend constexpr bool operator==(ColorSet, ColorSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

enum class AttackKind : std::uint8_t { Blue = 0, Red = 1, Yellow = 2, Black = 3 };

constexpr AttackKind colored(Color c) { return static_cast<AttackKind>(index_of(c)); }
constexpr bool is_black(AttackKind k) { return k == AttackKind::Black; }
constexpr ColorSet affected_colors(AttackKind k) {
  if (k == AttackKind::Black) return ColorSet{Color::Blue, Color::Red, Color::Yellow};
  return ColorSet{static_cast<Color>(static_cast<std::uint8_t>(k))};
}
std::string_view to_string(AttackKind k);
std::optional<AttackKind> parse_attack_kind(std::string_view s);

enum class ProjectSize : std::uint8_t { Small = 0, Medium = 1, Large = 2 };

inline constexpr std::array<ProjectSize, 3> kProjectSizes{ProjectSize::Small, ProjectSize::Medium,
                                                          ProjectSize::Large};
constexpr std::size_t index_of(ProjectSize s) { return static_cast<std::size_t>(s); }
std::string_view to_string(ProjectSize s);
std::optional<ProjectSize> parse_project_size(std::string_view s);

enum class Regime : std::uint8_t { Individual, Group };

std::string_view to_string(Regime r);
std::optional<Regime> parse_regime(std::string_view s);

enum class Compliance : std::uint8_t { Compliant, Noncompliant };

using PlayerId = std::string;

struct CompleteProjectTask {
  ProjectSize size;
  Color color;
  friend bool operator==(const CompleteProjectTask&, const CompleteProjectTask&) = default;
};

struct CompleteImmunityTask {
  Color color;
  friend bool operator==(const CompleteImmunityTask&, const CompleteImmunityTask&) = default;
};

struct PeerSanction {
  PlayerId target;
  friend bool operator==(const PeerSanction&, const PeerSanction&) = default;
};

struct Skip {
  friend bool operator==(const Skip&, const Skip&) = default;
};

using Action = std::variant<CompleteProjectTask, CompleteImmunityTask, PeerSanction, Skip>;

std::string describe(const Action& a);

}  // namespace normgame
