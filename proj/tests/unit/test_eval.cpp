#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "nmp/eval.hpp"

using namespace nmp;

namespace {

/// Replays planner demos keyed by query; succeeds whenever a demo exists.
class OraclePolicy : public Policy {
 public:
  explicit OraclePolicy(const DemoDataset& data) : data_(data) {}
  Vec7 act(const State& state, const GoalValue& goal, Rng&) const override {
    for (const auto& d : data_.demos) {
      const Vec7 g = normalize(d.query.goal_config, default_arm()->limits).s;
      if (!goal.config_target || (*goal.config_target - g).norm() > 1e-12) continue;
      std::size_t best = 0;
      for (std::size_t t = 1; t < d.states.size(); ++t) {
        if ((d.states[t] - state.s.s).norm() < (d.states[best] - state.s.s).norm()) best = t;
      }
      const std::size_t next = std::min(best + 1, d.states.size() - 1);
      return clip_action(d.states[next] - state.s.s, 0.03);
    }
    return Vec7::Zero();
  }
  std::string id() const override { return "oracle"; }

 private:
  const DemoDataset& data_;
};

}  // namespace

TEST_CASE("sample std uses the n-1 denominator") {
  CHECK(sample_std({0.5, 0.7}) == doctest::Approx(std::sqrt(0.02)));
  CHECK(sample_std({0.3}) == 0.0);
}

TEST_CASE("a policy that always succeeds scores 1 with zero spread") {
  const DemoDataset data = collect_demos(find_task("no_obstacles"), 10, 2);
  std::vector<Query> queries;
  for (const auto& d : data.demos) queries.push_back(d.query);
  const OraclePolicy policy(data);
  const EvalReport r = evaluate(policy, find_task("no_obstacles"), queries, {0, 1, 2});
  CHECK(r.success_rate == 1.0);
  CHECK(r.success_std == 0.0);
  CHECK(r.n_queries == 10);
  CHECK(r.collision_rate == 0.0);
  double mean_len = 0;
  for (const auto& d : data.demos) mean_len += static_cast<double>(d.actions.size());
  CHECK(r.mean_episode_length == doctest::Approx(mean_len / 10));
}

TEST_CASE("zero policy succeeds exactly where the start already satisfies the goal") {
  const auto arm = default_arm();
  QuerySet set = sample_queries(find_task("no_obstacles"), 30, 4);
  // Make a third of the queries trivially solved.
  for (std::size_t i = 0; i < set.queries.size(); i += 3) {
    Vec7 s = normalize(set.queries[i].start, arm->limits).s;
    s[0] = std::clamp(s[0] + 0.02, -1.0, 1.0);
    set.queries[i].goal_config = denormalize(NormalizedConfig{s}, arm->limits);
    set.queries[i].goal_ee = ee_position(set.queries[i].goal_config, *arm);
  }
  int expected = 0;
  for (const auto& q : set.queries) {
    expected += (normalize(q.goal_config, arm->limits).s - normalize(q.start, arm->limits).s).norm() <= 0.05;
  }
  const EvalReport r = evaluate(ZeroPolicy{}, find_task("no_obstacles"), set.queries, {0});
  CHECK(r.success_rate == doctest::Approx(double(expected) / set.queries.size()));
  CHECK(expected == 10);
}

TEST_CASE("evaluation is order independent and repeatable") {
  QuerySet set = sample_queries(find_task("wall"), 40, 5);
  GoToGoalPolicy p;
  EvalOptions opts;
  opts.keep_records = true;
  const EvalReport a = evaluate(p, find_task("wall"), set.queries, {0}, opts);
  std::reverse(set.queries.begin(), set.queries.end());
  opts.threads = 1;
  const EvalReport b = evaluate(p, find_task("wall"), set.queries, {0}, opts);
  CHECK(a.success_rate == b.success_rate);
  CHECK(a.mean_path_cost == doctest::Approx(b.mean_path_cost));
  for (std::size_t i = 0; i < 40; ++i) CHECK(a.records[0][i].success == b.records[0][39 - i].success);
  CHECK(a.success_rate > 0.0);
  CHECK_THROWS(evaluate(p, find_task("wall"), {}, {0}));
}

TEST_CASE("reports are written as JSON and a flat table") {
  const QuerySet set = sample_queries(find_task("no_obstacles"), 5, 1);
  const EvalReport r = evaluate(GoToGoalPolicy{}, find_task("no_obstacles"), set.queries, {3, 4});
  std::stringstream js, tsv;
  write_report_json(js, r);
  write_report_table(tsv, r);
  const auto doc = io::Json::parse(js.str());
  CHECK(doc.at("task") == "no_obstacles");
  CHECK(doc.at("seeds").size() == 2);
  int lines = 0;
  for (std::string line; std::getline(tsv, line);) ++lines;
  CHECK(lines == 3);
}

TEST_CASE("timing accounts trajectory time as step time times length") {
  const TimingResult t = measure_timing(GoToGoalPolicy{}, find_task("no_obstacles"), 20, 1);
  CHECK(t.episodes == 20);
  CHECK(t.avg_step_seconds > 0.0);
  CHECK(t.avg_trajectory_seconds == doctest::Approx(t.avg_step_seconds * t.mean_episode_length).epsilon(0.2));
}
