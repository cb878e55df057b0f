// Command-line front end: query/demo generation, training, evaluation, serving.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "nmp/environment.hpp"
#include "nmp/errors.hpp"
#include "nmp/eval.hpp"
#include "nmp/policy.hpp"
#include "nmp/sbmp.hpp"
#include "nmp/sensors.hpp"
#include "nmp/server.hpp"
#include "nmp/task_suite.hpp"

using namespace nmp;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path);
  return in;
}

std::unique_ptr<Policy> load_policy(const std::string& spec) {
  if (spec == "go_to_goal") return std::make_unique<GoToGoalPolicy>();
  if (spec == "zero") return std::make_unique<ZeroPolicy>();
  auto in = open_in(spec);
  return std::make_unique<MlpPolicy>(load_checkpoint(in));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytic 7-DoF arm environment: planning demos, BC training, evaluation"};
  app.require_subcommand(1);

  auto* tasks_cmd = app.add_subcommand("tasks", "List the task registry");

  std::string task_name, out_path, in_path, policy_spec, queries_path, goal_rep = "config", addr;
  int n = 100, seeds = 1, epochs = 60, max_attempts = 3, rays = 10000, max_sessions = 16;
  std::uint64_t seed = 0, query_seed = 0;
  unsigned threads = 0;
  double lr = 0.05;
  bool no_robot = false;
  std::string table_path;

  auto* sq = app.add_subcommand("sample-queries", "Sample a query set");
  sq->add_option("--task", task_name)->required();
  sq->add_option("--n", n)->check(CLI::PositiveNumber);
  sq->add_option("--seed", seed);
  sq->add_option("--out", out_path)->required();

  auto* gd = app.add_subcommand("generate-demos", "Plan, verify and store demonstrations");
  gd->add_option("--task", task_name)->required();
  gd->add_option("--n", n)->check(CLI::PositiveNumber);
  gd->add_option("--seed", seed);
  gd->add_option("--out", out_path)->required();
  gd->add_option("--threads", threads);
  gd->add_option("--max-attempts", max_attempts)->check(CLI::Range(1, 3));

  auto* vd = app.add_subcommand("verify-demos", "Replay every stored demo open-loop");
  vd->add_option("file", in_path)->required();

  auto* tb = app.add_subcommand("train-bc", "Behavioral cloning on a demo file");
  tb->add_option("--demos", in_path)->required();
  tb->add_option("--goal-rep", goal_rep)->check(CLI::IsMember({"ee", "config", "combined"}));
  tb->add_option("--seed", seed);
  tb->add_option("--epochs", epochs)->check(CLI::PositiveNumber);
  tb->add_option("--lr", lr)->check(CLI::PositiveNumber);
  tb->add_option("--out", out_path)->required();

  auto* ev = app.add_subcommand("evaluate", "Success rate of a policy on a task");
  ev->add_option("--policy", policy_spec, "go_to_goal, zero, or a checkpoint path")->required();
  ev->add_option("--task", task_name)->required();
  ev->add_option("--queries", queries_path, "query file; sampled when absent");
  ev->add_option("--n", n, "queries to sample when no file is given")->check(CLI::PositiveNumber);
  ev->add_option("--query-seed", query_seed);
  ev->add_option("--seeds", seeds)->check(CLI::PositiveNumber);
  ev->add_option("--threads", threads);
  ev->add_option("--out", out_path, "JSON report (stdout when absent)");
  ev->add_option("--table", table_path, "tab-separated per-seed rows");

  auto* sv = app.add_subcommand("serve", "Run the line-protocol environment server");
  sv->add_option("--addr", addr, "host:port (env NMP_SERVE_ADDR)");
  sv->add_option("--max-sessions", max_sessions)->check(CLI::PositiveNumber);

  auto* se = app.add_subcommand("sense", "Labeled point cloud of a task scene");
  se->add_option("--task", task_name)->required();
  se->add_option("--seed", seed);
  se->add_option("--rays", rays)->check(CLI::PositiveNumber);
  se->add_flag("--no-robot", no_robot);
  se->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (tasks_cmd->parsed()) {
      for (const auto& t : task_registry()) {
        std::cout << t.name << (t.sampler ? "\tsampled(" + to_string(*t.sampler) + ")" : "\tfixed") << "\n";
      }
    } else if (sq->parsed()) {
      const QuerySet set = sample_queries(find_task(task_name), n, seed);
      auto out = open_out(out_path);
      save_queries(out, set);
    } else if (gd->parsed()) {
      CollectionParams params;
      params.threads = threads;
      params.max_attempts = max_attempts;
      const DemoDataset data = collect_demos(find_task(task_name), n, seed, params);
      auto out = open_out(out_path);
      save_demos(out, data);
      const auto& r = data.report;
      std::cerr << data.demos.size() << " demos, " << r.queries_tried << " queries tried, reject rate "
                << r.reject_rate() << ", " << r.wall_seconds << " s\n";
    } else if (vd->parsed()) {
      auto in = open_in(in_path);
      const DatasetCheck check = verify_dataset(load_demos(in));
      std::cout << check.checked << " checked, " << check.failed << " failed\n";
      for (int i : check.failed_indices) std::cout << "failed demo " << i << "\n";
      return check.failed == 0 ? 0 : 2;
    } else if (tb->parsed()) {
      auto in = open_in(in_path);
      const DemoDataset data = load_demos(in);
      GoalSpec spec = data.engine.goal;
      spec.representation = parse_goal_representation(goal_rep);
      BcHyper hyper;
      hyper.seed = seed;
      hyper.epochs = epochs;
      hyper.learning_rate = lr;
      const BcTrainOutput trained = bc_train(data, spec, hyper);
      auto out = open_out(out_path);
      save_checkpoint(out, *trained.policy);
      for (std::size_t e = 0; e < trained.loss_curve.size(); ++e) {
        std::cerr << "epoch " << e << " loss " << trained.loss_curve[e] << "\n";
      }
    } else if (ev->parsed()) {
      const TaskSpec& task = find_task(task_name);
      std::vector<Query> queries;
      if (!queries_path.empty()) {
        auto in = open_in(queries_path);
        const QuerySet set = load_queries(in);
        if (set.task != task.name) throw InvalidArgument("query file is for task '" + set.task + "'");
        queries = set.queries;
      } else {
        queries = sample_queries(task, n, query_seed).queries;
      }
      const auto policy = load_policy(policy_spec);
      std::vector<std::uint64_t> seed_list;
      for (int i = 0; i < seeds; ++i) seed_list.push_back(static_cast<std::uint64_t>(i));
      EvalOptions opts;
      opts.threads = threads;
      const EvalReport report = evaluate(*policy, task, queries, seed_list, opts);
      if (out_path.empty()) {
        write_report_json(std::cout, report);
      } else {
        auto out = open_out(out_path);
        write_report_json(out, report);
      }
      if (!table_path.empty()) {
        auto table = open_out(table_path);
        write_report_table(table, report);
      }
    } else if (sv->parsed()) {
      ServerOptions opts;
      opts.apply_env();
      if (!addr.empty()) {
        const ServerOptions parsed = ServerOptions::parse_address(addr);
        opts.host = parsed.host;
        opts.port = parsed.port;
      }
      if (sv->count("--max-sessions")) opts.max_sessions = max_sessions;
      serve(opts);
    } else if (se->parsed()) {
      const TaskSpec& task = find_task(task_name);
      Environment env(task, seed);
      env.reset();
      SensorRig rig = SensorRig::cardinal();
      rig.rays_per_sensor = rays;
      std::optional<Configuration> c;
      if (!no_robot) c = denormalize(env.engine().state().s, env.scene().arm->limits);
      auto out = open_out(out_path);
      write_point_cloud(out, sense(env.scene(), c, rig));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
