#pragma once

#include <array>
#include <optional>
#include <variant>

#include "normgame/types.hpp"

namespace normgame {

struct ImmunityLoss {
  int lost_at_round = 0;
  int deadline_round = 0;
  friend bool operator==(const ImmunityLoss&, const ImmunityLoss&) = default;
};

// held <=> !loss. A capability can only be lost while its immunity is lost.
struct ImmunitySlot {
  Color color = Color::Blue;
  std::optional<ImmunityLoss> loss;
  bool capability_available = true;

  bool held() const { return !loss.has_value(); }
  friend bool operator==(const ImmunitySlot&, const ImmunitySlot&) = default;
};

struct Project {
  ProjectSize size = ProjectSize::Small;
  ColorSet required;
  ColorSet completed;

  ColorSet remaining() const { return required.minus(completed); }
  friend bool operator==(const Project&, const Project&) = default;
};

struct NoSanction {
  friend bool operator==(const NoSanction&, const NoSanction&) = default;
};

// Issued by the manager. Bystanders of a group sanction carry no restore set.
struct ManagerSanction {
  int rounds_remaining = 0;
  ColorSet restore;
  bool bystander = false;
  friend bool operator==(const ManagerSanction&, const ManagerSanction&) = default;
};

struct PeerSanctionStatus {
  int rounds_remaining = 0;
  friend bool operator==(const PeerSanctionStatus&, const PeerSanctionStatus&) = default;
};

using SanctionStatus = std::variant<NoSanction, ManagerSanction, PeerSanctionStatus>;

inline bool is_sanctioned(const SanctionStatus& s) { return !std::holds_alternative<NoSanction>(s); }
inline bool is_manager_sanctioned(const SanctionStatus& s) {
  return std::holds_alternative<ManagerSanction>(s);
}

struct PlayerState {
  PlayerId id;
  std::array<ImmunitySlot, 3> slots{ImmunitySlot{Color::Blue, {}, true},
                                    ImmunitySlot{Color::Red, {}, true},
                                    ImmunitySlot{Color::Yellow, {}, true}};
  std::array<Project, 3> projects{Project{ProjectSize::Small, {}, {}},
                                  Project{ProjectSize::Medium, {}, {}},
                                  Project{ProjectSize::Large, {}, {}}};
  int score = 0;
  SanctionStatus sanction = NoSanction{};
  double risk_score = 0.0;

  const ImmunitySlot& slot(Color c) const { return slots[index_of(c)]; }
  ImmunitySlot& slot(Color c) { return slots[index_of(c)]; }
  const Project& project(ProjectSize s) const { return projects[index_of(s)]; }
  Project& project(ProjectSize s) { return projects[index_of(s)]; }

  friend bool operator==(const PlayerState&, const PlayerState&) = default;
};

}  // namespace normgame
