#pragma once

#include <optional>
#include <string>

#include "nmp/types.hpp"

namespace nmp {

enum class GoalRepresentation { EE, Config, Combined };

std::string to_string(GoalRepresentation rep);
/// Accepts "ee", "config", "combined" (case-insensitive).
GoalRepresentation parse_goal_representation(const std::string& text);

struct GoalSpec {
  GoalRepresentation representation = GoalRepresentation::Config;
  double ee_tolerance = 0.02;      // meters
  double config_tolerance = 0.05;  // normalized L2

  void validate() const;
};

/// Goal as the policy sees it; fields populated as the representation demands.
struct GoalValue {
  std::optional<Vec3> ee_target;
  std::optional<Vec7> config_target;
};

GoalValue make_goal(const NormalizedConfig& goal_config, const Vec3& goal_ee, const GoalSpec& spec);

/// EE ball for EE and combined, normalized L2 ball for config.
bool goal_reached(const NormalizedConfig& s, const Vec3& ee, const GoalValue& goal, const GoalSpec& spec);

}  // namespace nmp
