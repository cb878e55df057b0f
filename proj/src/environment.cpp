#include "nmp/environment.hpp"

#include "nmp/errors.hpp"

namespace nmp {

Environment::Environment(const TaskSpec& task, std::uint64_t seed, std::optional<EngineParams> params,
                         std::shared_ptr<const ArmGeometry> arm)
    : task_(task), params_(params ? *params : EngineParams::from_task(task)), arm_(std::move(arm)), rng_(seed) {
  if (task_.sampler) {
    use_scene(std::make_shared<const Scene>(scene_for_task(task_, rng_.next_u64(), arm_)));
  } else {
    use_scene(std::make_shared<const Scene>(build_fixed_task(task_.name, arm_)));
  }
}

void Environment::use_scene(std::shared_ptr<const Scene> scene) {
  scene_ = std::move(scene);
  engine_.emplace(scene_, params_);
}

const State& Environment::reset() {
  if (task_.sampler) use_scene(std::make_shared<const Scene>(scene_for_task(task_, rng_.next_u64(), arm_)));
  query_ = sample_query(*scene_, rng_, 10000, params_.collision_margin);
  return engine_->reset(*query_);
}

const State& Environment::reset(const Query& query) {
  if (task_.sampler && query.scene_seed != scene_->seed) {
    use_scene(std::make_shared<const Scene>(scene_for_task(task_, query.scene_seed, arm_)));
  }
  const State& st = engine_->reset(query);
  query_ = query;
  return st;
}

const State& Environment::reset_specific(const Configuration& c, std::optional<Configuration> goal) {
  std::optional<GoalValue> gv;
  if (goal) {
    gv = make_goal(normalize(*goal, arm_->limits), ee_position(*goal, *arm_), params_.goal);
  }
  return engine_->reset_specific(c, gv);
}

Transition Environment::step(const Vec7& action, ActionMode mode) { return engine_->step(action, mode); }

}  // namespace nmp
