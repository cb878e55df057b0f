#include "nmp/eval.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "nmp/environment.hpp"
#include "nmp/errors.hpp"
#include "nmp/io.hpp"
#include "nmp/parallel.hpp"

namespace nmp {

namespace {
using Clock = std::chrono::steady_clock;
}

EpisodeRecord run_episode(const Policy& policy, EpisodeEngine& engine, const Query& query, Rng& rng) {
  EpisodeRecord rec;
  engine.reset(query);
  while (!engine.done()) {
    const auto t0 = Clock::now();
    const Vec7 action = policy.act(engine.state(), engine.goal(), rng);
    rec.policy_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
    const Transition tr = engine.step(action);
    rec.path_cost += tr.next_state.velocity.norm();
    rec.collided = rec.collided || tr.collided_during_step;
    rec.success = tr.goal_reached;
    rec.steps = tr.t;
  }
  return rec;
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

EvalReport evaluate(const Policy& policy, const TaskSpec& task, const std::vector<Query>& queries,
                    const std::vector<std::uint64_t>& seeds, const EvalOptions& options,
                    std::shared_ptr<const ArmGeometry> arm) {
  if (queries.empty()) throw InvalidArgument("evaluation needs at least one query");
  if (seeds.empty()) throw InvalidArgument("evaluation needs at least one seed");
  const EngineParams params = options.engine.value_or(EngineParams::from_task(task));
  std::shared_ptr<const Scene> fixed;
  if (!task.sampler) fixed = std::make_shared<const Scene>(build_fixed_task(task.name, arm));

  const std::size_t nq = queries.size();
  std::vector<EpisodeRecord> all(nq * seeds.size());
  parallel_for(
      all.size(),
      [&](std::size_t k) {
        const std::size_t si = k / nq;
        const std::size_t qi = k % nq;
        const Query& q = queries[qi];
        auto scene = fixed ? fixed : std::make_shared<const Scene>(scene_for_task(task, q.scene_seed, arm));
        EpisodeEngine engine(scene, params);
        Rng rng = Rng::stream(seeds[si], qi);
        all[k] = run_episode(policy, engine, q, rng);
      },
      options.threads);

  EvalReport report;
  report.task = task.name;
  report.policy_id = policy.id();
  report.n_queries = nq;
  report.seeds = seeds;
  double successes = 0, success_steps = 0, cost = 0, collided = 0, policy_time = 0, steps = 0;
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    int ok = 0;
    for (std::size_t qi = 0; qi < nq; ++qi) {
      const EpisodeRecord& r = all[si * nq + qi];
      if (r.success) {
        ++ok;
        success_steps += r.steps;
      }
      cost += r.path_cost;
      collided += r.collided ? 1 : 0;
      policy_time += r.policy_seconds;
      steps += r.steps;
    }
    successes += ok;
    report.per_seed_success.push_back(static_cast<double>(ok) / static_cast<double>(nq));
  }
  const double episodes = static_cast<double>(all.size());
  for (double s : report.per_seed_success) report.success_rate += s;
  report.success_rate /= static_cast<double>(seeds.size());
  report.success_std = sample_std(report.per_seed_success);
  report.mean_episode_length = successes > 0 ? success_steps / successes : 0.0;
  report.mean_path_cost = cost / episodes;
  report.collision_rate = collided / episodes;
  report.avg_step_seconds = steps > 0 ? policy_time / steps : 0.0;
  report.avg_trajectory_seconds = policy_time / episodes;
  if (options.keep_records) {
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      report.records.emplace_back(all.begin() + static_cast<std::ptrdiff_t>(si * nq),
                                  all.begin() + static_cast<std::ptrdiff_t>((si + 1) * nq));
    }
  }
  return report;
}

TimingResult measure_timing(const Policy& policy, const TaskSpec& task, int n_episodes, std::uint64_t seed,
                            std::shared_ptr<const ArmGeometry> arm) {
  if (n_episodes < 1) throw InvalidArgument("timing needs at least one episode");
  Environment env(task, seed, std::nullopt, arm);
  Rng rng = Rng::stream(seed, 0);
  double total = 0.0;
  long steps = 0;
  for (int e = 0; e < n_episodes; ++e) {
    env.reset();
    while (!env.engine().done()) {
      const auto t0 = Clock::now();
      const Vec7 action = policy.act(env.engine().state(), env.engine().goal(), rng);
      total += std::chrono::duration<double>(Clock::now() - t0).count();
      env.step(action);
      ++steps;
    }
  }
  TimingResult r;
  r.episodes = n_episodes;
  r.avg_step_seconds = total / static_cast<double>(steps);
  r.avg_trajectory_seconds = total / n_episodes;
  r.mean_episode_length = static_cast<double>(steps) / n_episodes;
  return r;
}

void write_report_json(std::ostream& out, const EvalReport& r) {
  const io::Json doc = {{"schema_version", 1},
                        {"kind", "eval_report"},
                        {"task", r.task},
                        {"policy", r.policy_id},
                        {"n_queries", r.n_queries},
                        {"seeds", r.seeds},
                        {"per_seed_success", r.per_seed_success},
                        {"success_rate", r.success_rate},
                        {"success_std", r.success_std},
                        {"mean_episode_length", r.mean_episode_length},
                        {"mean_path_cost", r.mean_path_cost},
                        {"collision_rate", r.collision_rate},
                        {"avg_step_seconds", r.avg_step_seconds},
                        {"avg_trajectory_seconds", r.avg_trajectory_seconds}};
  out << doc.dump(2) << "\n";
}

void write_report_table(std::ostream& out, const EvalReport& r) {
  out << "task\tpolicy\tseed\tn_queries\tsuccess\tmean_success\tstd\tmean_len\tpath_cost\tcollision_rate\t"
         "step_s\ttraj_s\n";
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    out << r.task << '\t' << r.policy_id << '\t' << r.seeds[i] << '\t' << r.n_queries << '\t' << r.per_seed_success[i]
        << '\t' << r.success_rate << '\t' << r.success_std << '\t' << r.mean_episode_length << '\t'
        << r.mean_path_cost << '\t' << r.collision_rate << '\t' << r.avg_step_seconds << '\t'
        << r.avg_trajectory_seconds << '\n';
  }
}

}  // namespace nmp
