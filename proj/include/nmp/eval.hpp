#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nmp/episode.hpp"
#include "nmp/policy.hpp"
#include "nmp/task_suite.hpp"

namespace nmp {

struct EpisodeRecord {
  bool success = false;
  bool collided = false;
  int steps = 0;
  double path_cost = 0.0;  // sum of ||delta s||
  double policy_seconds = 0.0;
};

struct EvalOptions {
  std::optional<EngineParams> engine;  // defaults to the task's
  unsigned threads = 0;
  bool keep_records = false;
};

struct EvalReport {
  std::string task;
  std::string policy_id;
  std::size_t n_queries = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed_success;
  double success_rate = 0.0;  // mean over seeds
  double success_std = 0.0;   // sample std over seeds, 0 for one seed
  double mean_episode_length = 0.0;  // successes only
  double mean_path_cost = 0.0;
  double collision_rate = 0.0;
  double avg_step_seconds = 0.0;
  double avg_trajectory_seconds = 0.0;
  /// records[seed][query] when keep_records is set.
  std::vector<std::vector<EpisodeRecord>> records;
};

/// Runs one episode with the policy from the query's start.
EpisodeRecord run_episode(const Policy& policy, EpisodeEngine& engine, const Query& query, Rng& rng);

/// Every query under every seed. Episode (seed k, query i) uses Rng::stream(seed_k, i),
/// so the result does not depend on thread count or query order.
EvalReport evaluate(const Policy& policy, const TaskSpec& task, const std::vector<Query>& queries,
                    const std::vector<std::uint64_t>& seeds, const EvalOptions& options = {},
                    std::shared_ptr<const ArmGeometry> arm = default_arm());

struct TimingResult {
  int episodes = 0;
  double avg_step_seconds = 0.0;
  double avg_trajectory_seconds = 0.0;
  double mean_episode_length = 0.0;
};

/// Wall-clock time of policy calls only, over n episodes sampled with `seed`.
TimingResult measure_timing(const Policy& policy, const TaskSpec& task, int n_episodes, std::uint64_t seed = 0,
                            std::shared_ptr<const ArmGeometry> arm = default_arm());

double sample_std(const std::vector<double>& values);

void write_report_json(std::ostream& out, const EvalReport& report);
/// One header row plus one row per seed, tab separated.
void write_report_table(std::ostream& out, const EvalReport& report);

}  // namespace nmp
