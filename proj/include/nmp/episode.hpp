#pragma once

#include <memory>
#include <optional>

#include "nmp/geometry.hpp"
#include "nmp/goal.hpp"
#include "nmp/task_suite.hpp"
#include "nmp/types.hpp"

namespace nmp {

struct State {
  NormalizedConfig s;
  /// Last realized displacement; zero after reset.
  Vec7 velocity = Vec7::Zero();
  Vec3 ee = Vec3::Zero();
  bool absorbed = false;
};

bool goal_reached(const State& state, const GoalValue& goal, const GoalSpec& spec);

struct Transition {
  State state;
  Vec7 action = Vec7::Zero();
  State next_state;
  double cost = -1.0;
  bool done = false;
  GoalValue goal;
  // Step info.
  int t = 0;  // step index after this transition (1-based)
  bool goal_reached = false;
  bool collided_during_step = false;
};

enum class ActionMode { Relative, Subgoal };

struct EngineParams {
  double action_bound = 0.03;
  int horizon = 400;
  bool stop_on_collision = false;
  /// After termination, further steps return the absorbing state at zero cost.
  bool absorbing = false;
  double collision_margin = 0.0;
  double edge_step = kDefaultEdgeStep;
  GoalSpec goal;

  static EngineParams from_task(const TaskSpec& task);
  void validate() const;
};

/// One goal-conditioned episode over an immutable scene.
///
/// A step moves toward the clipped target along a straight line in normalized
/// space, sampled every `edge_step`. Motion stops at the last collision-free
/// sample, so the arm rests in contact instead of passing through obstacles.
class EpisodeEngine {
 public:
  EpisodeEngine(std::shared_ptr<const Scene> scene, EngineParams params);

  /// Throws InfeasibleQuery if the start collides or lies outside the limits.
  const State& reset(const Query& query);
  /// Starts at exactly c, keeping the current goal (if any). Throws OutOfLimits.
  const State& reset_specific(const Configuration& c, std::optional<GoalValue> goal = std::nullopt);

  /// Throws EpisodeFinished when called after termination without absorbing mode.
  Transition step(const Vec7& action, ActionMode mode = ActionMode::Relative);

  const State& state() const { return state_; }
  const GoalValue& goal() const { return goal_; }
  const EngineParams& params() const { return params_; }
  const Scene& scene() const { return *scene_; }
  std::shared_ptr<const Scene> scene_ptr() const { return scene_; }
  int t() const { return t_; }
  bool done() const { return done_; }

  State make_state(const NormalizedConfig& s, const Vec7& velocity) const;

 private:
  std::shared_ptr<const Scene> scene_;
  EngineParams params_;
  State state_;
  GoalValue goal_;
  int t_ = 0;
  bool done_ = false;
  bool started_ = false;
};

}  // namespace nmp
