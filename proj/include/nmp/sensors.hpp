#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include "nmp/geometry.hpp"

namespace nmp {

enum class PointLabel { Robot, Static, Varying };

const char* to_string(PointLabel label);

struct LabeledPoint {
  Vec3 position = Vec3::Zero();
  PointLabel label = PointLabel::Static;
  int sensor = 0;
  /// Obstacle index for Static/Varying points, arm capsule index for Robot.
  int body = 0;
};

struct LabeledPointCloud {
  std::vector<LabeledPoint> points;
};

struct SensorRig {
  std::array<Vec3, 4> origins;
  Vec3 target = Vec3(0.0, 0.0, 0.4);
  int rays_per_sensor = 10000;
  double max_range = 4.0;
  double half_angle = 0.61;  // view cone half-angle, radians

  /// Four sensors on the cardinal axes, 1.5 m out and 0.8 m up.
  static SensorRig cardinal();
  void validate(const Scene& scene) const;
};

/// Deterministic Fibonacci-spiral bundle over the sensor's view cone.
std::vector<Vec3> ray_directions(const SensorRig& rig, int sensor);

/// Ray entry distance, if the ray starting outside the body hits it.
std::optional<double> ray_box(const Vec3& origin, const Vec3& dir, const Box& box);
std::optional<double> ray_plane(const Vec3& origin, const Vec3& dir, const Plane& plane);
std::optional<double> ray_capsule(const Vec3& origin, const Vec3& dir, const Capsule& cap);

/// First hits of every sensor ray. Without a configuration the arm is left out.
LabeledPointCloud sense(const Scene& scene, const std::optional<Configuration>& c, const SensorRig& rig);

/// Text dump: one "x y z label sensor" record per line after a '#' header.
void write_point_cloud(std::ostream& out, const LabeledPointCloud& cloud);

}  // namespace nmp
