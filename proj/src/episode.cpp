#include "nmp/episode.hpp"

#include "nmp/errors.hpp"

namespace nmp {

bool goal_reached(const State& state, const GoalValue& goal, const GoalSpec& spec) {
  return goal_reached(state.s, state.ee, goal, spec);
}

EngineParams EngineParams::from_task(const TaskSpec& task) {
  EngineParams p;
  p.horizon = task.horizon;
  p.stop_on_collision = task.stop_on_collision;
  p.goal = task.goal_spec;
  return p;
}

void EngineParams::validate() const {
  if (!(action_bound > 0.0)) throw InvalidArgument("action bound must be positive");
  if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
  if (!(edge_step > 0.0)) throw InvalidArgument("edge step must be positive");
  if (!(collision_margin >= 0.0)) throw InvalidArgument("collision margin must be non-negative");
  goal.validate();
}

EpisodeEngine::EpisodeEngine(std::shared_ptr<const Scene> scene, EngineParams params)
    : scene_(std::move(scene)), params_(std::move(params)) {
  if (!scene_ || !scene_->arm) throw InvalidArgument("engine needs a scene with an arm");
  params_.validate();
}

State EpisodeEngine::make_state(const NormalizedConfig& s, const Vec7& velocity) const {
  State st;
  st.s = s;
  st.velocity = velocity;
  st.ee = ee_position(denormalize(s, scene_->arm->limits), *scene_->arm);
  return st;
}

const State& EpisodeEngine::reset(const Query& query) {
  const ArmGeometry& arm = *scene_->arm;
  if (!arm.limits.contains(query.start.q) || !arm.limits.contains(query.goal_config.q)) {
    throw InfeasibleQuery("query outside joint limits");
  }
  if (is_collision(*scene_, query.start, params_.collision_margin)) {
    throw InfeasibleQuery("query start is in collision");
  }
  goal_ = make_goal(normalize(query.goal_config, arm.limits), query.goal_ee, params_.goal);
  state_ = make_state(normalize(query.start, arm.limits), Vec7::Zero());
  t_ = 0;
  done_ = false;
  started_ = true;
  return state_;
}

const State& EpisodeEngine::reset_specific(const Configuration& c, std::optional<GoalValue> goal) {
  const NormalizedConfig s = normalize(c, scene_->arm->limits);  // throws OutOfLimits
  if (goal) goal_ = *goal;
  state_ = make_state(s, Vec7::Zero());
  t_ = 0;
  done_ = false;
  started_ = true;
  return state_;
}

Transition EpisodeEngine::step(const Vec7& action, ActionMode mode) {
  if (!started_) throw InvalidArgument("step called before reset");
  if (!action.allFinite()) throw InvalidArgument("action must be finite");
  Transition tr;
  tr.state = state_;
  tr.action = action;
  tr.goal = goal_;
  if (done_) {
    if (!params_.absorbing) throw EpisodeFinished("episode already terminated");
    State sink = state_;
    sink.absorbed = true;
    sink.velocity.setZero();
    state_ = sink;
    tr.next_state = sink;
    tr.cost = 0.0;
    tr.done = true;
    tr.t = t_;
    return tr;
  }

  const Vec7& s = state_.s.s;
  Vec7 target;
  if (mode == ActionMode::Relative) {
    target = s + clip_action(action, params_.action_bound);
  } else {
    const Vec7 diff = action - s;
    // An in-reach subgoal is taken verbatim so that replaying recorded states is exact.
    target = diff.norm() <= params_.action_bound ? action : Vec7(s + clip_action(diff, params_.action_bound));
  }
  target = target.cwiseMax(-1.0).cwiseMin(1.0);

  const int n = interpolation_segments(s, target, params_.edge_step);
  NormalizedConfig reached{s};
  bool collided = false;
  for (int i = 1; i <= n; ++i) {
    NormalizedConfig p;
    p.s = i == n ? target : Vec7((s + (target - s) * (static_cast<double>(i) / n)).cwiseMax(-1.0).cwiseMin(1.0));
    if (is_collision(*scene_, p, params_.collision_margin)) {
      collided = true;
      break;
    }
    reached = p;
  }

  state_ = make_state(reached, reached.s - s);
  ++t_;
  tr.next_state = state_;
  tr.t = t_;
  tr.collided_during_step = collided;
  tr.goal_reached = goal_reached(state_, goal_, params_.goal);
  tr.cost = tr.goal_reached ? 0.0 : -1.0;
  tr.done = tr.goal_reached || t_ >= params_.horizon || (collided && params_.stop_on_collision);
  done_ = tr.done;
  return tr;
}

}  // namespace nmp
