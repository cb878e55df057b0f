#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "nmp/errors.hpp"
#include "nmp/task_suite.hpp"

using namespace nmp;

namespace {
int count_boxes(const Scene& s) {
  int n = 0;
  for (const auto& o : s.obstacles) n += std::holds_alternative<Box>(o.shape);
  return n;
}
}  // namespace

TEST_CASE("registry lists every task once") {
  std::map<std::string, int> seen;
  for (const auto& t : task_registry()) ++seen[t.name];
  for (const char* name : {"no_obstacles", "wall", "double_wall_wide_gap", "double_walls", "boxes",
                           "random_boxes_easy", "random_boxes_medium", "random_boxes_hard", "narrow_shelves",
                           "three_shelves", "pole_shelves"}) {
    CHECK(seen[name] == 1);
  }
  CHECK_THROWS_AS(find_task("nope"), UnknownTask);
  CHECK_THROWS_AS(build_fixed_task("random_boxes_easy"), UnknownTask);
}

TEST_CASE("fixed scenes are valid and leave the home pose free") {
  const auto arm = default_arm();
  for (const auto& t : task_registry()) {
    if (t.sampler) continue;
    const Scene s = build_fixed_task(t.name, arm);
    for (const auto& o : s.obstacles) CHECK_NOTHROW(o.validate());
    CHECK_FALSE(is_collision(s, Configuration{arm->home}));
    if (t.name != "no_obstacles") CHECK(count_boxes(s) > 0);
  }
}

TEST_CASE("random box scenes are a pure function of the seed") {
  const Scene a = sample_random_boxes(Difficulty::Medium, 77);
  const Scene b = sample_random_boxes(Difficulty::Medium, 77);
  REQUIRE(a.obstacles.size() == b.obstacles.size());
  for (std::size_t i = 0; i < a.obstacles.size(); ++i) {
    if (const auto* ba = std::get_if<Box>(&a.obstacles[i].shape)) {
      const auto& bb = std::get<Box>(b.obstacles[i].shape);
      CHECK(ba->center == bb.center);
      CHECK(ba->half_extents == bb.half_extents);
      CHECK(ba->yaw == bb.yaw);
    }
  }
  CHECK(a.seed == std::optional<std::uint64_t>(77));
}

TEST_CASE("random box counts are uniform over the difficulty range") {
  const auto [lo, hi] = box_count_range(Difficulty::Hard);
  REQUIRE(hi - lo == 4);
  std::vector<int> hist(hi - lo + 1, 0);
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const int c = count_boxes(sample_random_boxes(Difficulty::Hard, static_cast<std::uint64_t>(i)));
    REQUIRE(c >= lo);
    REQUIRE(c <= hi);
    ++hist[c - lo];
  }
  const double expected = double(n) / hist.size();
  double chi2 = 0;
  for (int h : hist) chi2 += (h - expected) * (h - expected) / expected;
  CHECK(chi2 < 13.277);  // 4 degrees of freedom, p = 0.01
}

TEST_CASE("random boxes stay within the placement annulus and on the table") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = sample_random_boxes(Difficulty::Easy, seed);
    for (const auto& o : s.obstacles) {
      if (const auto* b = std::get_if<Box>(&o.shape)) {
        const double r = std::hypot(b->center.x(), b->center.y());
        CHECK(r >= 0.25 - 1e-12);
        CHECK(r <= 0.75 + 1e-12);
        CHECK(b->center.z() == doctest::Approx(b->half_extents.z()));
        CHECK(o.label == ObstacleLabel::Varying);
      }
    }
  }
}

TEST_CASE("sampled queries are collision free and carry the EE goal") {
  const auto arm = default_arm();
  const TaskSpec& task = find_task("wall");
  const Scene scene = build_fixed_task("wall", arm);
  const QuerySet set = sample_queries(task, 50, 5, arm);
  CHECK(set.queries.size() == 50);
  for (const auto& q : set.queries) {
    CHECK_FALSE(is_collision(scene, q.start));
    CHECK_FALSE(is_collision(scene, q.goal_config));
    CHECK((q.goal_ee - ee_position(q.goal_config, *arm)).norm() == 0.0);
  }
}

TEST_CASE("sampler-task queries remember their scene") {
  const QuerySet set = sample_queries(find_task("random_boxes_easy"), 10, 3);
  for (const auto& q : set.queries) {
    REQUIRE(q.scene_seed.has_value());
    const Scene s = scene_for_task(find_task("random_boxes_easy"), q.scene_seed);
    CHECK_FALSE(is_collision(s, q.start));
  }
}

TEST_CASE("infeasible scenes report after max_tries") {
  const auto arm = default_arm();
  Scene s = empty_scene(arm);
  s.obstacles.push_back({Box{Vec3(0, 0, 0.5), Vec3(3, 3, 3), 0.0}, ObstacleLabel::Static});
  Rng rng(0);
  CHECK_THROWS_AS(sample_query(s, rng, 50), Infeasible);
}

TEST_CASE("query and scene files round trip exactly") {
  const QuerySet set = sample_queries(find_task("random_boxes_hard"), 20, 11);
  std::stringstream ss;
  save_queries(ss, set);
  const QuerySet back = load_queries(ss);
  CHECK(back.task == set.task);
  CHECK(back.seed == set.seed);
  REQUIRE(back.queries.size() == set.queries.size());
  for (std::size_t i = 0; i < set.queries.size(); ++i) CHECK(back.queries[i] == set.queries[i]);

  const Scene scene = build_fixed_task("pole_shelves");
  std::stringstream sc;
  save_scene(sc, scene);
  const Scene sback = load_scene(sc);
  CHECK(sback.obstacles.size() == scene.obstacles.size());
  std::stringstream again;
  save_scene(again, sback);
  std::stringstream first;
  save_scene(first, scene);
  CHECK(again.str() == first.str());
}

TEST_CASE("malformed query files name the line") {
  std::istringstream wrong_kind(R"({"schema_version":1,"kind":"scene"})" "\n");
  CHECK_THROWS_AS(load_queries(wrong_kind), ParseError);
  std::istringstream wrong_version(R"({"schema_version":7,"kind":"queries"})" "\n");
  CHECK_THROWS_AS(load_queries(wrong_version), ParseError);

  const QuerySet set = sample_queries(find_task("no_obstacles"), 2, 1);
  std::stringstream ss;
  save_queries(ss, set);
  std::string text = ss.str();
  text.resize(text.size() - 10);
  text += "\n";
  std::istringstream truncated(text);
  try {
    load_queries(truncated);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("the shipped query fixture regenerates bit for bit") {
  std::ifstream in(NMP_FIXTURE_DIR "/no_obstacles_1k.jsonl");
  REQUIRE(in.good());
  std::stringstream file;
  file << in.rdbuf();
  std::istringstream parse(file.str());
  const QuerySet loaded = load_queries(parse);
  CHECK(loaded.queries.size() == 1000);
  std::stringstream regen;
  save_queries(regen, sample_queries(find_task(loaded.task), 1000, loaded.seed));
  CHECK(regen.str() == file.str());
}
