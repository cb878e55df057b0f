#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nmp/arm_model.hpp"
#include "nmp/types.hpp"

namespace nmp {

struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
};

/// Gravity-aligned box, rotated about the world z axis by `yaw`.
struct Box {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Constant(0.1);
  double yaw = 0.0;

  Vec3 to_local(const Vec3& p) const;
  Vec3 to_world(const Vec3& p) const;
};

/// Occupied half-space {x : normal . x <= offset}.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};

enum class ObstacleLabel { Static, Varying };

struct Obstacle {
  std::variant<Box, Plane> shape;
  ObstacleLabel label = ObstacleLabel::Varying;

  void validate() const;
};

struct Scene {
  std::string name;
  std::vector<Obstacle> obstacles;
  std::shared_ptr<const ArmGeometry> arm;
  std::optional<std::uint64_t> seed;
};

/// Table surface at z = 0 (the arm is mounted on it) and the floor below.
inline constexpr double kTableHeight = 0.75;
Obstacle table_plane();
Obstacle floor_plane();
/// Scene holding only the table and floor.
Scene empty_scene(std::shared_ptr<const ArmGeometry> arm, std::string name = "no_obstacles");

struct SegmentClosest {
  double distance;
  double s;  // parameter on the first segment
  double t;  // parameter on the second segment
};

SegmentClosest segment_segment_closest(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2);
double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

/// Signed distance of a point to the box surface (negative inside).
double point_box_signed_distance(const Vec3& p, const Box& box);

double capsule_capsule_distance(const Capsule& c1, const Capsule& c2);
double capsule_box_distance(const Capsule& cap, const Box& box);
double capsule_plane_distance(const Capsule& cap, const Plane& plane);
double capsule_obstacle_distance(const Capsule& cap, const Obstacle& obs);

/// World-frame capsules of the arm at configuration c, in ArmGeometry order.
std::vector<Capsule> arm_capsules(const ArmGeometry& arm, const Configuration& c);

/// Minimum signed clearance over every checked (capsule, obstacle) and
/// self-collision pair. The base link only checks varying obstacles.
double min_clearance(const Scene& scene, const Configuration& c);

/// True iff some checked pair is within `margin` (contact counts).
bool is_collision(const Scene& scene, const Configuration& c, double margin = 0.0);
bool is_collision(const Scene& scene, const NormalizedConfig& s, double margin = 0.0);

inline constexpr double kDefaultEdgeStep = 0.01;

/// Number of equal segments used to cover |s2 - s1| with spacing <= step.
int interpolation_segments(const Vec7& s1, const Vec7& s2, double step);

/// Checks evenly spaced points (endpoints included) at normalized spacing <= step.
bool edge_collision_free(const Scene& scene, const NormalizedConfig& s1, const NormalizedConfig& s2,
                         double step = kDefaultEdgeStep, double margin = 0.0);

}  // namespace nmp
