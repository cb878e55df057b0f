#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "nmp/episode.hpp"
#include "nmp/rng.hpp"
#include "nmp/task_suite.hpp"

namespace nmp {

/// A task instance with its own random stream: the unit a training loop
/// talks to. Sampler tasks draw a fresh scene on every reset().
class Environment {
 public:
  Environment(const TaskSpec& task, std::uint64_t seed, std::optional<EngineParams> params = std::nullopt,
              std::shared_ptr<const ArmGeometry> arm = default_arm());

  /// Samples a new query (and scene, for sampler tasks) from the stream.
  const State& reset();
  /// Resets to a given query; sampler tasks rebuild the query's scene.
  const State& reset(const Query& query);
  const State& reset_specific(const Configuration& c, std::optional<Configuration> goal = std::nullopt);
  Transition step(const Vec7& action, ActionMode mode = ActionMode::Relative);

  const TaskSpec& task() const { return task_; }
  const EngineParams& params() const { return params_; }
  const Scene& scene() const { return *scene_; }
  std::shared_ptr<const Scene> scene_ptr() const { return scene_; }
  const std::optional<Query>& query() const { return query_; }
  const EpisodeEngine& engine() const { return *engine_; }

 private:
  void use_scene(std::shared_ptr<const Scene> scene);

  TaskSpec task_;
  EngineParams params_;
  std::shared_ptr<const ArmGeometry> arm_;
  Rng rng_;
  std::shared_ptr<const Scene> scene_;
  std::optional<EpisodeEngine> engine_;
  std::optional<Query> query_;
};

}  // namespace nmp
