#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nmp/geometry.hpp"
#include "nmp/goal.hpp"
#include "nmp/io.hpp"
#include "nmp/rng.hpp"

namespace nmp {

/// Bumped whenever a fixed scene or a sampler distribution changes.
inline constexpr int kSceneSchemaVersion = 1;

enum class Difficulty { Easy, Medium, Hard };

std::string to_string(Difficulty d);

enum class TaskCategory { GoalGeneralization, ObstacleGeneralization, OutOfDistribution };

struct TaskSpec {
  std::string name;
  TaskCategory category = TaskCategory::GoalGeneralization;
  /// Set for tasks whose scene is resampled every episode.
  std::optional<Difficulty> sampler;
  GoalSpec goal_spec;
  int horizon = 400;
  bool stop_on_collision = false;
};

const std::vector<TaskSpec>& task_registry();
/// Throws UnknownTask.
const TaskSpec& find_task(const std::string& name);

/// Throws UnknownTask for names that are not fixed-scene tasks.
Scene build_fixed_task(const std::string& name, std::shared_ptr<const ArmGeometry> arm = default_arm());

/// Inclusive box-count range per difficulty.
std::pair<int, int> box_count_range(Difficulty d);

struct RandomBoxParams {
  double half_extent_min = 0.05;
  double half_extent_max = 0.20;
  double radius_min = 0.25;
  double radius_max = 0.75;
  int max_box_attempts = 1000;
};

Scene sample_random_boxes(Difficulty difficulty, Rng& rng, std::shared_ptr<const ArmGeometry> arm = default_arm(),
                          const RandomBoxParams& params = {});
/// Seeded form: the scene records `seed` and is a pure function of it.
Scene sample_random_boxes(Difficulty difficulty, std::uint64_t seed,
                          std::shared_ptr<const ArmGeometry> arm = default_arm());

/// Fixed scene, or the sampled scene for `scene_seed`.
Scene scene_for_task(const TaskSpec& task, std::optional<std::uint64_t> scene_seed,
                     std::shared_ptr<const ArmGeometry> arm = default_arm());

struct Query {
  Configuration start;
  Configuration goal_config;
  Vec3 goal_ee = Vec3::Zero();
  /// Scene seed for sampler tasks.
  std::optional<std::uint64_t> scene_seed;

  bool operator==(const Query& other) const;
};

/// Rejection-samples start then goal uniformly over the joint-limit box.
/// Throws Infeasible once `max_tries` samples have been rejected.
Query sample_query(const Scene& scene, Rng& rng, int max_tries = 10000, double margin = 0.0);

struct QuerySet {
  std::string task;
  std::uint64_t seed = 0;
  std::vector<Query> queries;
};

/// Samples n queries for a task; sampler tasks draw one scene per query.
QuerySet sample_queries(const TaskSpec& task, int n, std::uint64_t seed,
                        std::shared_ptr<const ArmGeometry> arm = default_arm());

io::Json query_to_json(const Query& q);
Query query_from_json(const io::Json& rec);

void save_scene(std::ostream& out, const Scene& scene);
Scene load_scene(std::istream& in, std::shared_ptr<const ArmGeometry> arm = default_arm());
void save_queries(std::ostream& out, const QuerySet& set);
QuerySet load_queries(std::istream& in);

}  // namespace nmp
