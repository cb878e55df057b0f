#include "nmp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nmp/errors.hpp"

namespace nmp {

Vec3 Box::to_local(const Vec3& p) const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const Vec3 d = p - center;
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
}

Vec3 Box::to_world(const Vec3& p) const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return Vec3{c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z()} + center;
}

void Obstacle::validate() const {
  if (const auto* box = std::get_if<Box>(&shape)) {
    if (!(box->half_extents.array() > 0.0).all()) throw InvalidArgument("box half-extents must be positive");
    if (!box->center.allFinite() || !std::isfinite(box->yaw)) throw InvalidArgument("box pose must be finite");
  } else {
    const auto& plane = std::get<Plane>(shape);
    if (std::abs(plane.normal.norm() - 1.0) > 1e-9) throw InvalidArgument("plane normal must be unit length");
    if (!std::isfinite(plane.offset)) throw InvalidArgument("plane offset must be finite");
  }
}

Obstacle table_plane() { return {Plane{Vec3::UnitZ(), 0.0}, ObstacleLabel::Static}; }
Obstacle floor_plane() { return {Plane{Vec3::UnitZ(), -kTableHeight}, ObstacleLabel::Static}; }

Scene empty_scene(std::shared_ptr<const ArmGeometry> arm, std::string name) {
  Scene scene;
  scene.name = std::move(name);
  scene.arm = std::move(arm);
  scene.obstacles = {table_plane(), floor_plane()};
  return scene;
}

// Closest points between two segments.
SegmentClosest segment_segment_closest(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  constexpr double kEps = 1e-15;
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= kEps && e <= kEps) {
    // both degenerate
  } else if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > kEps * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return {((p1 + d1 * s) - (p2 + d2 * t)).norm(), s, t};
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

double point_box_signed_distance(const Vec3& p, const Box& box) {
  const Vec3 q = box.to_local(p).cwiseAbs() - box.half_extents;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

double capsule_capsule_distance(const Capsule& c1, const Capsule& c2) {
  return segment_segment_closest(c1.a, c1.b, c2.a, c2.b).distance - c1.radius - c2.radius;
}

double capsule_box_distance(const Capsule& cap, const Box& box) {
  // The signed distance field of a convex set is convex, so its restriction
  // to the segment is minimized by golden-section search.
  const Vec3 a = box.to_local(cap.a);
  const Vec3 ab = box.to_local(cap.b) - a;
  auto sdf = [&](double t) {
    const Vec3 q = (a + t * ab).cwiseAbs() - box.half_extents;
    return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
  };
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = 0.0, hi = 1.0;
  double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
  double f1 = sdf(x1), f2 = sdf(x2);
  for (int it = 0; it < 64 && hi - lo > 1e-13; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = sdf(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = sdf(x2);
    }
  }
  const double best = std::min({f1, f2, sdf(0.0), sdf(1.0)});
  return best - cap.radius;
}

double capsule_plane_distance(const Capsule& cap, const Plane& plane) {
  return std::min(plane.normal.dot(cap.a), plane.normal.dot(cap.b)) - plane.offset - cap.radius;
}

double capsule_obstacle_distance(const Capsule& cap, const Obstacle& obs) {
  if (const auto* box = std::get_if<Box>(&obs.shape)) return capsule_box_distance(cap, *box);
  return capsule_plane_distance(cap, std::get<Plane>(obs.shape));
}

std::vector<Capsule> arm_capsules(const ArmGeometry& arm, const Configuration& c) {
  const FkResult fk = forward_kinematics(c, arm);
  std::vector<Capsule> out;
  out.reserve(arm.capsules.size());
  for (const auto& lc : arm.capsules) {
    const Pose& frame = fk.frames[lc.link];
    out.push_back({frame.apply(lc.from), frame.apply(lc.to), lc.radius});
  }
  return out;
}

namespace {

bool checks_obstacle(const LinkCapsule& lc, const Obstacle& obs) {
  return lc.link != 0 || obs.label == ObstacleLabel::Varying;
}

// Lower bound on capsule/box distance from the box's circumscribed sphere.
double box_sphere_bound(const Capsule& cap, const Box& box) {
  return point_segment_distance(box.center, cap.a, cap.b) - box.half_extents.norm() - cap.radius;
}

// Visits every checked pair; stops early when `visit` returns true.
template <typename Visit>
bool for_each_pair(const Scene& scene, const std::vector<Capsule>& caps, Visit&& visit) {
  const ArmGeometry& arm = *scene.arm;
  for (std::size_t i = 0; i < caps.size(); ++i) {
    for (const auto& obs : scene.obstacles) {
      if (!checks_obstacle(arm.capsules[i], obs)) continue;
      if (visit(caps[i], obs)) return true;
    }
  }
  for (const auto& [li, lj] : arm.self_collision_pairs) {
    for (std::size_t i = 0; i < caps.size(); ++i) {
      if (arm.capsules[i].link != li) continue;
      for (std::size_t j = 0; j < caps.size(); ++j) {
        if (arm.capsules[j].link != lj) continue;
        if (visit(caps[i], caps[j])) return true;
      }
    }
  }
  return false;
}

}  // namespace

double min_clearance(const Scene& scene, const Configuration& c) {
  const auto caps = arm_capsules(*scene.arm, c);
  double best = std::numeric_limits<double>::infinity();
  for_each_pair(scene, caps, [&](const Capsule& cap, const auto& other) {
    if constexpr (std::is_same_v<std::decay_t<decltype(other)>, Obstacle>) {
      best = std::min(best, capsule_obstacle_distance(cap, other));
    } else {
      best = std::min(best, capsule_capsule_distance(cap, other));
    }
    return false;
  });
  return best;
}

bool is_collision(const Scene& scene, const Configuration& c, double margin) {
  const auto caps = arm_capsules(*scene.arm, c);
  return for_each_pair(scene, caps, [&](const Capsule& cap, const auto& other) {
    if constexpr (std::is_same_v<std::decay_t<decltype(other)>, Obstacle>) {
      if (const auto* box = std::get_if<Box>(&other.shape)) {
        if (box_sphere_bound(cap, *box) > margin) return false;
        return capsule_box_distance(cap, *box) <= margin;
      }
      return capsule_plane_distance(cap, std::get<Plane>(other.shape)) <= margin;
    } else {
      return capsule_capsule_distance(cap, other) <= margin;
    }
  });
}

bool is_collision(const Scene& scene, const NormalizedConfig& s, double margin) {
  return is_collision(scene, denormalize(s, scene.arm->limits), margin);
}

int interpolation_segments(const Vec7& s1, const Vec7& s2, double step) {
  if (!(step > 0.0)) throw InvalidArgument("interpolation step must be positive");
  const double len = (s2 - s1).norm();
  return std::max(1, static_cast<int>(std::ceil(len / step)));
}

bool edge_collision_free(const Scene& scene, const NormalizedConfig& s1, const NormalizedConfig& s2, double step,
                         double margin) {
  const int n = interpolation_segments(s1.s, s2.s, step);
  for (int i = 0; i <= n; ++i) {
    NormalizedConfig p;
    p.s = i == n ? s2.s : Vec7((s1.s + (s2.s - s1.s) * (static_cast<double>(i) / n)).cwiseMax(-1.0).cwiseMin(1.0));
    if (is_collision(scene, p, margin)) return false;
  }
  return true;
}

}  // namespace nmp
