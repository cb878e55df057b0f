#include <doctest.h>

#include "nmp/errors.hpp"
#include "nmp/geometry.hpp"
#include "nmp/rng.hpp"
#include "nmp/task_suite.hpp"
#include "oracles.hpp"

using namespace nmp;

namespace {

Vec3 random_point(Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

Capsule random_capsule(Rng& rng) {
  const Vec3 a = random_point(rng, -0.5, 0.5);
  return {a, a + random_point(rng, -0.3, 0.3), rng.uniform(0.02, 0.1)};
}

Box random_box(Rng& rng) {
  return {random_point(rng, -0.3, 0.3), Vec3(rng.uniform(0.05, 0.2), rng.uniform(0.05, 0.2), rng.uniform(0.05, 0.2)),
          rng.uniform(0.0, M_PI)};
}

}  // namespace

TEST_CASE("segment closest points on hand cases") {
  const auto r = segment_segment_closest({0, 0, 0}, {1, 0, 0}, {0.5, 1, 0}, {0.5, 2, 0});
  CHECK(r.distance == doctest::Approx(1.0));
  CHECK(r.s == doctest::Approx(0.5));
  CHECK(r.t == doctest::Approx(0.0));
  // Parallel overlapping segments.
  CHECK(segment_segment_closest({0, 0, 0}, {1, 0, 0}, {0.2, 0.3, 0}, {2, 0.3, 0}).distance == doctest::Approx(0.3));
  // Degenerate segments.
  CHECK(segment_segment_closest({0, 0, 0}, {0, 0, 0}, {0, 0, 2}, {0, 0, 2}).distance == doctest::Approx(2.0));
  CHECK(point_segment_distance({0, 1, 0}, {-1, 0, 0}, {1, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("capsule distances agree with dense sampling") {
  Rng rng(21);
  for (int k = 0; k < 100; ++k) {
    const Capsule c1 = random_capsule(rng), c2 = random_capsule(rng);
    CHECK(std::abs(capsule_capsule_distance(c1, c2) - oracle::sampled_capsule_distance(c1, c2, 200)) < 1e-3);
    const Box b = random_box(rng);
    CHECK(std::abs(capsule_box_distance(c1, b) - oracle::sampled_capsule_box_distance(c1, b, 4000)) < 1e-3);
  }
}

TEST_CASE("box signed distance") {
  const Box b{{0, 0, 0}, {1, 2, 3}, 0.0};
  CHECK(point_box_signed_distance({2, 0, 0}, b) == doctest::Approx(1.0));
  CHECK(point_box_signed_distance({0, 0, 0}, b) == doctest::Approx(-1.0));
  CHECK(point_box_signed_distance({2, 3, 0}, b) == doctest::Approx(std::sqrt(2.0)));
  const Box rotated{{0, 0, 0}, {1, 0.1, 0.1}, M_PI / 2};
  CHECK(point_box_signed_distance({0, 0.95, 0}, rotated) < 0.0);
  CHECK(point_box_signed_distance({0.95, 0, 0}, rotated) > 0.0);
}

TEST_CASE("capsule against plane") {
  const Plane p{Vec3::UnitZ(), 0.0};
  CHECK(capsule_plane_distance({{0, 0, 1}, {0, 0, 0.5}, 0.1}, p) == doctest::Approx(0.4));
  CHECK(capsule_plane_distance({{0, 0, 1}, {0, 0, -0.5}, 0.1}, p) == doctest::Approx(-0.6));
}

TEST_CASE("home pose is free in the empty scene") {
  const auto arm = default_arm();
  const Scene s = empty_scene(arm);
  CHECK_FALSE(is_collision(s, Configuration{arm->home}));
  CHECK(min_clearance(s, Configuration{arm->home}) > 0.0);
}

TEST_CASE("folding the arm into the table collides") {
  const auto arm = default_arm();
  const Scene s = empty_scene(arm);
  Vec7 q = arm->home;
  q[1] = 1.7;
  q[3] = -1.5;
  CHECK(is_collision(s, Configuration{q}));
}

TEST_CASE("is_collision agrees with the clearance sign") {
  const auto arm = default_arm();
  const Scene scene = build_fixed_task("double_walls", arm);
  Rng rng(3);
  for (int k = 0; k < 300; ++k) {
    Vec7 s;
    for (int i = 0; i < 7; ++i) s[i] = rng.uniform(-1.0, 1.0);
    const Configuration c = denormalize(NormalizedConfig{s}, arm->limits);
    CHECK(is_collision(scene, c) == (min_clearance(scene, c) <= 0.0));
  }
}

TEST_CASE("edge checker endpoints and resolution") {
  const auto arm = default_arm();
  const Scene s = empty_scene(arm);
  const Vec7 home = normalize(Configuration{arm->home}, arm->limits).s;
  CHECK(interpolation_segments(home, home, 0.01) == 1);
  Vec7 far = home;
  far[0] += 0.095;
  CHECK(interpolation_segments(home, far, 0.01) == 10);
  CHECK(edge_collision_free(s, NormalizedConfig{home}, NormalizedConfig{far}));

  Vec7 bad = home;
  bad[1] = 1.0;
  bad[3] = 1.0;
  CHECK(is_collision(s, NormalizedConfig{bad}));
  CHECK_FALSE(edge_collision_free(s, NormalizedConfig{home}, NormalizedConfig{bad}));
}

TEST_CASE("edge checker matches a ten times finer resolution") {
  const auto arm = default_arm();
  const Scene scene = build_fixed_task("wall", arm);
  Rng rng(8);
  int disagreements = 0;
  for (int k = 0; k < 100; ++k) {
    Vec7 a, d;
    for (int i = 0; i < 7; ++i) {
      a[i] = rng.uniform(-1.0, 1.0);
      d[i] = rng.uniform(-1.0, 1.0);
    }
    const Vec7 b = (a + d.normalized() * 0.15).cwiseMax(-1.0).cwiseMin(1.0);
    const bool coarse = edge_collision_free(scene, NormalizedConfig{a}, NormalizedConfig{b}, 0.01);
    const bool fine = edge_collision_free(scene, NormalizedConfig{a}, NormalizedConfig{b}, 0.001);
    disagreements += coarse != fine;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("obstacle validation") {
  Obstacle o;
  o.shape = Box{Vec3::Zero(), Vec3(-1, 1, 1), 0.0};
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
  o.shape = Plane{Vec3::Zero(), 0.0};
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
}
