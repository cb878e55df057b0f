#include <doctest.h>

#include <sstream>

#include "nmp/rng.hpp"
#include "nmp/sensors.hpp"
#include "nmp/task_suite.hpp"
#include "oracles.hpp"

using namespace nmp;

namespace {

double body_distance(const Scene& scene, const std::vector<Capsule>& caps, const LabeledPoint& p) {
  if (p.label == PointLabel::Robot) {
    const Capsule& c = caps.at(p.body);
    return point_segment_distance(p.position, c.a, c.b) - c.radius;
  }
  const Obstacle& o = scene.obstacles.at(p.body);
  if (const auto* b = std::get_if<Box>(&o.shape)) return oracle::box_sdf(p.position, *b);
  const auto& pl = std::get<Plane>(o.shape);
  return pl.normal.dot(p.position) - pl.offset;
}

}  // namespace

TEST_CASE("empty scene without the arm sees only static surfaces") {
  const Scene s = empty_scene(default_arm());
  SensorRig rig = SensorRig::cardinal();
  rig.rays_per_sensor = 2000;
  const LabeledPointCloud cloud = sense(s, std::nullopt, rig);
  CHECK_FALSE(cloud.points.empty());
  for (const auto& p : cloud.points) CHECK(p.label == PointLabel::Static);
}

TEST_CASE("a floating box is seen on its surface and labeled varying") {
  Scene s = empty_scene(default_arm());
  s.obstacles.clear();
  const Box box{Vec3(0, 0, 0.6), Vec3(0.2, 0.15, 0.1), 0.4};
  s.obstacles.push_back({box, ObstacleLabel::Varying});
  SensorRig rig = SensorRig::cardinal();
  rig.rays_per_sensor = 3000;
  const LabeledPointCloud cloud = sense(s, std::nullopt, rig);
  REQUIRE_FALSE(cloud.points.empty());
  for (const auto& p : cloud.points) {
    CHECK(p.label == PointLabel::Varying);
    CHECK(std::abs(oracle::box_sdf(p.position, box)) < 1e-6);
  }
}

TEST_CASE("every point lies on exactly the body it names") {
  const auto arm = default_arm();
  const Scene s = sample_random_boxes(Difficulty::Hard, 9);
  const Configuration c{arm->home};
  const auto caps = arm_capsules(*arm, c);
  SensorRig rig = SensorRig::cardinal();
  rig.rays_per_sensor = 2500;
  const LabeledPointCloud cloud = sense(s, c, rig);
  int robot = 0, varying = 0;
  std::vector<int> per_sensor(4, 0);
  for (const auto& p : cloud.points) {
    CHECK(std::abs(body_distance(s, caps, p)) < 1e-6);
    robot += p.label == PointLabel::Robot;
    varying += p.label == PointLabel::Varying;
    ++per_sensor.at(p.sensor);
  }
  CHECK(robot > 0);
  CHECK(varying > 0);
  for (int n : per_sensor) CHECK(n <= rig.rays_per_sensor);
}

TEST_CASE("clouds are deterministic and the default rig casts 10k rays") {
  const auto arm = default_arm();
  const Scene s = build_fixed_task("boxes", arm);
  const SensorRig rig = SensorRig::cardinal();
  CHECK(rig.rays_per_sensor == 10000);
  CHECK(ray_directions(rig, 0).size() == 10000);
  const auto a = sense(s, Configuration{arm->home}, rig);
  const auto b = sense(s, Configuration{arm->home}, rig);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i].position == b.points[i].position);
  std::stringstream ss;
  write_point_cloud(ss, a);
  std::string header;
  std::getline(ss, header);
  CHECK(header.rfind("#", 0) == 0);
}

TEST_CASE("ray primitives") {
  const Box b{Vec3(2, 0, 0), Vec3(0.5, 0.5, 0.5), 0.0};
  CHECK(*ray_box(Vec3::Zero(), Vec3::UnitX(), b) == doctest::Approx(1.5));
  CHECK_FALSE(ray_box(Vec3::Zero(), -Vec3::UnitX(), b).has_value());
  CHECK(*ray_plane(Vec3(0, 0, 1), -Vec3::UnitZ(), Plane{Vec3::UnitZ(), 0}) == doctest::Approx(1.0));
  CHECK_FALSE(ray_plane(Vec3(0, 0, 1), Vec3::UnitZ(), Plane{Vec3::UnitZ(), 0}).has_value());
  const Capsule cap{Vec3(0, -1, 0), Vec3(0, 1, 0), 0.2};
  CHECK(*ray_capsule(Vec3(-2, 0, 0), Vec3::UnitX(), cap) == doctest::Approx(1.8));
  CHECK(*ray_capsule(Vec3(0, -3, 0), Vec3::UnitY(), cap) == doctest::Approx(1.8));
}

TEST_CASE("sensor origins must be outside obstacles") {
  Scene s = empty_scene(default_arm());
  s.obstacles.push_back({Box{Vec3(1.5, 0, 0.8), Vec3::Constant(0.1), 0.0}, ObstacleLabel::Varying});
  CHECK_THROWS(SensorRig::cardinal().validate(s));
}
