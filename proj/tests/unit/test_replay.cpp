#include <doctest.h>

#include <thread>

#include "nmp/errors.hpp"
#include "nmp/replay.hpp"

using namespace nmp;

namespace {

std::shared_ptr<const Scene> empty() { return std::make_shared<const Scene>(empty_scene(default_arm())); }

/// A failed episode of `steps` small moves away from the home pose.
std::vector<Transition> failed_episode(int steps, GoalRepresentation rep = GoalRepresentation::Config) {
  const auto arm = default_arm();
  EngineParams p;
  p.goal.representation = rep;
  EpisodeEngine e(empty(), p);
  Query q;
  q.start = Configuration{arm->home};
  Vec7 g = normalize(q.start, arm->limits).s;
  g[0] -= 0.8;
  q.goal_config = denormalize(NormalizedConfig{g}, arm->limits);
  q.goal_ee = ee_position(q.goal_config, *arm);
  e.reset(q);
  std::vector<Transition> ep;
  Vec7 a = Vec7::Zero();
  a[2] = 0.03;
  for (int i = 0; i < steps; ++i) ep.push_back(e.step(a));
  return ep;
}

}  // namespace

TEST_CASE("final relabel of a failed 3-step episode") {
  const auto ep = failed_episode(3);
  for (const auto& t : ep) CHECK(t.cost == -1.0);
  // Steps of 0.03 with a 0.05 ball: the second state already lies within reach
  // of the final one, so use a sparser episode for the textbook case.
  GoalSpec tight;
  tight.config_tolerance = 0.01;
  const auto relabeled = relabel_final(ep, tight);
  REQUIRE(relabeled.size() == 3);
  CHECK(relabeled[0].cost == -1.0);
  CHECK(relabeled[1].cost == -1.0);
  CHECK(relabeled[2].cost == 0.0);
  CHECK(relabeled[2].done);
  CHECK_FALSE(relabeled[0].done);
  CHECK(*relabeled[0].goal.config_target == ep.back().next_state.s.s);
}

TEST_CASE("relabeling truncates at the first reach") {
  const auto ep = failed_episode(10);
  const auto relabeled = relabel_final(ep, GoalSpec{});
  int zero = 0;
  for (const auto& t : relabeled) zero += t.cost == 0.0;
  CHECK(zero == 1);
  CHECK(relabeled.back().cost == 0.0);
  CHECK(relabeled.back().done);
  CHECK(relabeled.size() < ep.size());
}

TEST_CASE("goal substitution follows the representation") {
  const auto ep = failed_episode(4, GoalRepresentation::Combined);
  GoalSpec combined{GoalRepresentation::Combined};
  const auto r = relabel_final(ep, combined);
  CHECK(r.back().goal.ee_target.has_value());
  CHECK(r.back().goal.config_target.has_value());
  GoalSpec ee{GoalRepresentation::EE};
  const auto r2 = relabel_final(ep, ee);
  CHECK_FALSE(r2.back().goal.config_target.has_value());
  CHECK(*r2.back().goal.ee_target == ep.back().next_state.ee);
}

TEST_CASE("her_relabel probability edges") {
  const auto ep = failed_episode(5);
  Rng rng(1);
  const HerOutput none = her_relabel(ep, 0.0, rng, GoalSpec{});
  CHECK_FALSE(none.relabeled);
  CHECK(none.hindsight.empty());
  REQUIRE(none.original.size() == ep.size());
  for (std::size_t i = 0; i < ep.size(); ++i) CHECK(none.original[i].next_state.s.s == ep[i].next_state.s.s);

  const HerOutput all = her_relabel(ep, 1.0, rng, GoalSpec{}, false);
  CHECK(all.relabeled);
  CHECK(all.original.empty());
  CHECK_THROWS_AS(her_relabel({}, 0.5, rng, GoalSpec{}), EmptyEpisode);
}

TEST_CASE("an already successful episode keeps its costs under relabeling") {
  const auto arm = default_arm();
  EpisodeEngine e(empty(), EngineParams{});
  Query q;
  q.start = Configuration{arm->home};
  Vec7 g = normalize(q.start, arm->limits).s;
  g[1] += 0.1;
  q.goal_config = denormalize(NormalizedConfig{g}, arm->limits);
  q.goal_ee = ee_position(q.goal_config, *arm);
  e.reset(q);
  std::vector<Transition> ep;
  while (!e.done()) ep.push_back(e.step(*e.goal().config_target - e.state().s.s));
  REQUIRE(ep.back().goal_reached);
  const auto r = relabel_final(ep, GoalSpec{});
  REQUIRE(r.size() <= ep.size());
  CHECK(r.back().cost == 0.0);
}

TEST_CASE("buffer counters track sources through wrap-around") {
  ReplayBuffer buf(10);
  const auto ep = failed_episode(4);
  buf.add_all(ep, TransitionSource::Env);
  buf.add_all(ep, TransitionSource::Hindsight);
  CHECK(buf.size() == 8);
  buf.add_all(ep, TransitionSource::Injected);
  CHECK(buf.size() == 10);
  CHECK(buf.count(TransitionSource::Env) + buf.count(TransitionSource::Hindsight) +
            buf.count(TransitionSource::Injected) ==
        buf.size());
  CHECK(buf.count(TransitionSource::Env) == 2);
  CHECK(buf.count(TransitionSource::Injected) == 4);
  CHECK(buf.total_added() == 12);
  Rng rng(3);
  CHECK(buf.sample(32, rng).size() == 32);
  CHECK_THROWS_AS(ReplayBuffer(0), InvalidArgument);
}

TEST_CASE("concurrent appenders keep the counters consistent") {
  ReplayBuffer buf(1000);
  const auto ep = failed_episode(5);
  std::vector<std::thread> threads;
  for (int k = 0; k < 4; ++k) {
    threads.emplace_back([&, k] {
      for (int i = 0; i < 100; ++i) buf.add_all(ep, static_cast<TransitionSource>(k % 3));
    });
  }
  for (auto& t : threads) t.join();
  CHECK(buf.total_added() == 2000);
  CHECK(buf.size() == 1000);
  CHECK(buf.count(TransitionSource::Env) + buf.count(TransitionSource::Hindsight) +
            buf.count(TransitionSource::Injected) ==
        1000);
}

TEST_CASE("demo injection") {
  const DemoDataset data = collect_demos(find_task("no_obstacles"), 5, 3);
  const DemoIndex index(data);
  Rng rng(4);

  SUBCASE("p = 1 appends the whole demo with true sparse costs") {
    ReplayBuffer buf(10000);
    const std::size_t n = inject_demo(buf, data.demos[2].query, 1.0, index, rng);
    CHECK(n == data.demos[2].actions.size());
    CHECK(buf.count(TransitionSource::Injected) == n);
    for (std::size_t i = 0; i + 1 < n; ++i) CHECK(buf.at(i).cost == -1.0);
    CHECK(buf.at(n - 1).cost == 0.0);
    CHECK(buf.at(n - 1).done);
  }
  SUBCASE("p = 0 appends nothing") {
    ReplayBuffer buf(100);
    CHECK(inject_demo(buf, data.demos[0].query, 0.0, index, rng) == 0);
    CHECK(buf.size() == 0);
  }
  SUBCASE("unknown queries use the nearest start") {
    Query q = data.demos[3].query;
    q.start.q[0] += 1e-4;
    CHECK(index.match(q) == 3);
    CHECK(index.match(data.demos[1].query) == 1);
  }
  SUBCASE("injected transitions replay as a successful episode") {
    const auto& trs = index.transitions(0);
    EpisodeEngine e(empty(), data.engine);
    e.reset(data.demos[0].query);
    for (const auto& t : trs) {
      const Transition r = e.step(t.action);
      CHECK(r.next_state.s.s == t.next_state.s.s);
    }
    CHECK(trs.back().goal_reached);
  }
}

TEST_CASE("an empty demo index logs and injects nothing") {
  DemoDataset empty_set;
  empty_set.task = "no_obstacles";
  const DemoIndex index(empty_set);
  ReplayBuffer buf(10);
  Rng rng(0);
  CHECK(inject_demo(buf, Query{}, 1.0, index, rng) == 0);
  CHECK_THROWS_AS(index.match(Query{}), NoDemoAvailable);
}

TEST_CASE("store_episode files originals and hindsight copies separately") {
  ReplayBuffer buf(1000);
  Rng rng(5);
  const auto ep = failed_episode(6);
  const std::size_t n = store_episode(buf, ep, 1.0, rng, GoalSpec{});
  CHECK(buf.count(TransitionSource::Env) == 6);
  CHECK(buf.count(TransitionSource::Hindsight) == n - 6);
}
