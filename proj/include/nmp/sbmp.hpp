#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nmp/episode.hpp"
#include "nmp/geometry.hpp"
#include "nmp/task_suite.hpp"

namespace nmp {

struct PlannerParams {
  int max_iterations = 20000;
  double extend_step = 0.05;  // normalized L2
  double connect_tolerance = 1e-6;
  double edge_check_step = kDefaultEdgeStep;
  double goal_bias = 0.05;  // chance of steering toward the other tree's root
  double collision_margin = 0.0;
  std::uint64_t seed = 0;
  /// Joints the planner may move; inactive joints keep the start value.
  std::array<bool, kDof> active{true, true, true, true, true, true, true};

  void validate() const;
};

struct PlanResult {
  bool success = false;
  std::vector<Vec7> path;  // normalized configurations, start first
  int iterations = 0;
  std::size_t tree_nodes = 0;
};

/// Bidirectional RRT in normalized configuration space.
/// Throws InvalidEndpoint if either endpoint collides.
PlanResult rrt_connect(const Scene& scene, const NormalizedConfig& start, const NormalizedConfig& goal,
                       const PlannerParams& params);

/// Drops interior nodes that lie on the segment between their neighbours
/// (within tol). The traced point set is unchanged.
std::vector<Vec7> merge_collinear(const std::vector<Vec7>& path, double tol = 1e-9);

/// Splits every edge uniformly into ceil(len / max_step) pieces.
std::vector<Vec7> densify_path(const std::vector<Vec7>& path, double max_step);

/// Consecutive differences. Throws InvalidArgument for fewer than 2 nodes and
/// StepTooLarge when a difference exceeds a_max.
std::vector<Vec7> path_to_actions(const std::vector<Vec7>& path, double a_max);

struct Demonstration {
  Query query;
  std::vector<Vec7> states;   // executed normalized states, s_0 first
  std::vector<Vec7> actions;  // states[t+1] - states[t]
  bool verified = false;
  int attempts_used = 1;
};

enum class VerifyFailure { Timeout, Collision };
const char* to_string(VerifyFailure f);

struct VerifyResult {
  std::optional<Demonstration> demo;
  std::optional<VerifyFailure> failure;
  int failed_step = 0;

  bool ok() const { return demo.has_value(); }
};

/// Follows the path node by node in subgoal mode until the goal predicate
/// fires. The executed trace (not the raw plan) becomes the demonstration.
VerifyResult verify_plan(EpisodeEngine& engine, const Query& query, const std::vector<Vec7>& path);

struct ReplayOutcome {
  bool reached_goal = false;
  bool collided = false;
  int steps = 0;
  std::vector<Vec7> states;
};

/// Open-loop replay of the stored actions. Subgoal mode feeds the recorded
/// states as subgoals and reproduces the trace bit for bit.
ReplayOutcome replay_demo(EpisodeEngine& engine, const Demonstration& demo, ActionMode mode = ActionMode::Relative);

struct CollectionParams {
  PlannerParams planner;
  int max_attempts = 3;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct CollectionReport {
  int queries_tried = 0;
  int rejected = 0;
  int planner_failures = 0;
  int verification_failures = 0;
  double wall_seconds = 0.0;

  double reject_rate() const { return queries_tried ? static_cast<double>(rejected) / queries_tried : 0.0; }
};

inline constexpr int kDemoSchemaVersion = 1;

io::Json engine_params_to_json(const EngineParams& p);
EngineParams engine_params_from_json(const io::Json& j);

struct DemoDataset {
  std::string task;
  std::uint64_t seed = 0;
  EngineParams engine;
  std::vector<Demonstration> demos;
  CollectionReport report;
};

/// Query slot j draws its scene, query and planner seeds from Rng::stream(seed, j);
/// each query gets up to max_attempts plan+verify rounds before it is rejected.
DemoDataset collect_demos(const TaskSpec& task, int n, std::uint64_t seed, const CollectionParams& params = {},
                          std::shared_ptr<const ArmGeometry> arm = default_arm());

void save_demos(std::ostream& out, const DemoDataset& data);
DemoDataset load_demos(std::istream& in);

struct DatasetCheck {
  int checked = 0;
  int failed = 0;
  std::vector<int> failed_indices;
};

/// Replays every demo open-loop; a demo passes iff it reaches its goal with no contact.
DatasetCheck verify_dataset(const DemoDataset& data, std::shared_ptr<const ArmGeometry> arm = default_arm());

}  // namespace nmp
