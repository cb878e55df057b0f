#include "nmp/goal.hpp"

#include <algorithm>
#include <cctype>

#include "nmp/errors.hpp"

namespace nmp {

std::string to_string(GoalRepresentation rep) {
  switch (rep) {
    case GoalRepresentation::EE: return "ee";
    case GoalRepresentation::Config: return "config";
    case GoalRepresentation::Combined: return "combined";
  }
  return "config";
}

GoalRepresentation parse_goal_representation(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "ee") return GoalRepresentation::EE;
  if (t == "config") return GoalRepresentation::Config;
  if (t == "combined") return GoalRepresentation::Combined;
  throw InvalidArgument("unknown goal representation '" + text + "'");
}

void GoalSpec::validate() const {
  if (!(ee_tolerance > 0.0) || !(config_tolerance > 0.0)) throw InvalidArgument("goal tolerances must be positive");
}

GoalValue make_goal(const NormalizedConfig& goal_config, const Vec3& goal_ee, const GoalSpec& spec) {
  GoalValue g;
  if (spec.representation != GoalRepresentation::Config) g.ee_target = goal_ee;
  if (spec.representation != GoalRepresentation::EE) g.config_target = goal_config.s;
  return g;
}

bool goal_reached(const NormalizedConfig& s, const Vec3& ee, const GoalValue& goal, const GoalSpec& spec) {
  if (spec.representation == GoalRepresentation::Config) {
    if (!goal.config_target) throw MissingGoalField("config goal requires a configuration target");
    return (*goal.config_target - s.s).norm() <= spec.config_tolerance;
  }
  if (!goal.ee_target) throw MissingGoalField("EE goal requires an end-effector target");
  if (spec.representation == GoalRepresentation::Combined && !goal.config_target) {
    throw MissingGoalField("combined goal requires a configuration target");
  }
  return (*goal.ee_target - ee).norm() <= spec.ee_tolerance;
}

}  // namespace nmp
