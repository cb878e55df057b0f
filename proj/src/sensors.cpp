#include "nmp/sensors.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "nmp/errors.hpp"

namespace nmp {

const char* to_string(PointLabel label) {
  switch (label) {
    case PointLabel::Robot: return "robot";
    case PointLabel::Static: return "static";
    case PointLabel::Varying: return "varying";
  }
  return "static";
}

SensorRig SensorRig::cardinal() {
  SensorRig rig;
  rig.origins = {Vec3(1.5, 0.0, 0.8), Vec3(0.0, 1.5, 0.8), Vec3(-1.5, 0.0, 0.8), Vec3(0.0, -1.5, 0.8)};
  return rig;
}

void SensorRig::validate(const Scene& scene) const {
  if (rays_per_sensor <= 0) throw InvalidArgument("rays per sensor must be positive");
  if (!(max_range > 0.0) || !(half_angle > 0.0) || half_angle >= std::numbers::pi / 2) {
    throw InvalidArgument("sensor range and cone angle must be positive (cone below 90 degrees)");
  }
  for (const auto& o : origins) {
    for (const auto& obs : scene.obstacles) {
      const double d = std::holds_alternative<Box>(obs.shape)
                           ? point_box_signed_distance(o, std::get<Box>(obs.shape))
                           : std::get<Plane>(obs.shape).normal.dot(o) - std::get<Plane>(obs.shape).offset;
      if (d <= 0.0) throw InvalidArgument("sensor origin lies inside an obstacle");
    }
  }
}

std::vector<Vec3> ray_directions(const SensorRig& rig, int sensor) {
  const Vec3 forward = (rig.target - rig.origins.at(sensor)).normalized();
  const Vec3 helper = std::abs(forward.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 u = forward.cross(helper).normalized();
  const Vec3 v = forward.cross(u);
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double cos_max = std::cos(rig.half_angle);
  const int n = rig.rays_per_sensor;
  std::vector<Vec3> dirs;
  dirs.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double cos_t = 1.0 - (1.0 - cos_max) * (k + 0.5) / n;
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const double phi = golden_angle * k;
    dirs.push_back((cos_t * forward + sin_t * (std::cos(phi) * u + std::sin(phi) * v)).normalized());
  }
  return dirs;
}

std::optional<double> ray_box(const Vec3& origin, const Vec3& dir, const Box& box) {
  const Vec3 o = box.to_local(origin);
  const Vec3 d = box.to_local(origin + dir) - o;
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const double h = box.half_extents[k];
    if (std::abs(d[k]) < 1e-300) {
      if (o[k] < -h || o[k] > h) return std::nullopt;
      continue;
    }
    double t0 = (-h - o[k]) / d[k], t1 = (h - o[k]) / d[k];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (t_enter > t_exit || t_enter <= 0.0) return std::nullopt;
  return t_enter;
}

std::optional<double> ray_plane(const Vec3& origin, const Vec3& dir, const Plane& plane) {
  const double height = plane.normal.dot(origin) - plane.offset;
  const double rate = plane.normal.dot(dir);
  if (height <= 0.0 || rate >= 0.0) return std::nullopt;
  return -height / rate;
}

namespace {

std::optional<double> ray_sphere(const Vec3& origin, const Vec3& dir, const Vec3& center, double r) {
  const Vec3 oc = origin - center;
  const double b = oc.dot(dir);
  const double c = oc.squaredNorm() - r * r;
  const double h = b * b - c;
  if (c <= 0.0 || h < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(h);
  if (t <= 0.0) return std::nullopt;
  return t;
}

}  // namespace

std::optional<double> ray_capsule(const Vec3& origin, const Vec3& dir, const Capsule& cap) {
  // Entry into the union of the cylinder body and the two end spheres.
  std::optional<double> best;
  auto keep = [&](std::optional<double> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  const Vec3 ba = cap.b - cap.a;
  const Vec3 oa = origin - cap.a;
  const double baba = ba.squaredNorm();
  const double bard = ba.dot(dir);
  const double baoa = ba.dot(oa);
  const double a = baba - bard * bard;
  if (a > 1e-12 * baba) {
    const double b = baba * dir.dot(oa) - baoa * bard;
    const double c = baba * oa.squaredNorm() - baoa * baoa - cap.radius * cap.radius * baba;
    const double h = b * b - a * c;
    if (h >= 0.0 && c > 0.0) {
      const double t = (-b - std::sqrt(h)) / a;
      const double y = baoa + t * bard;
      if (t > 0.0 && y >= 0.0 && y <= baba) keep(t);
    }
  }
  keep(ray_sphere(origin, dir, cap.a, cap.radius));
  keep(ray_sphere(origin, dir, cap.b, cap.radius));
  return best;
}

LabeledPointCloud sense(const Scene& scene, const std::optional<Configuration>& c, const SensorRig& rig) {
  rig.validate(scene);
  std::vector<Capsule> caps;
  if (c) caps = arm_capsules(*scene.arm, *c);
  LabeledPointCloud cloud;
  for (int sensor = 0; sensor < static_cast<int>(rig.origins.size()); ++sensor) {
    const Vec3& origin = rig.origins[sensor];
    for (const Vec3& dir : ray_directions(rig, sensor)) {
      double best_t = rig.max_range;
      std::optional<LabeledPoint> hit;
      auto consider = [&](std::optional<double> t, PointLabel label, int body) {
        if (t && *t <= best_t) {
          best_t = *t;
          hit = LabeledPoint{origin + *t * dir, label, sensor, body};
        }
      };
      for (int i = 0; i < static_cast<int>(scene.obstacles.size()); ++i) {
        const Obstacle& obs = scene.obstacles[i];
        const PointLabel label = obs.label == ObstacleLabel::Static ? PointLabel::Static : PointLabel::Varying;
        if (const auto* box = std::get_if<Box>(&obs.shape)) {
          consider(ray_box(origin, dir, *box), label, i);
        } else {
          consider(ray_plane(origin, dir, std::get<Plane>(obs.shape)), label, i);
        }
      }
      for (int i = 0; i < static_cast<int>(caps.size()); ++i) consider(ray_capsule(origin, dir, caps[i]), PointLabel::Robot, i);
      if (hit) cloud.points.push_back(*hit);
    }
  }
  return cloud;
}

void write_point_cloud(std::ostream& out, const LabeledPointCloud& cloud) {
  out << "# x y z label sensor\n" << std::setprecision(17);
  for (const auto& p : cloud.points) {
    out << p.position.x() << " " << p.position.y() << " " << p.position.z() << " " << to_string(p.label) << " "
        << p.sensor << "\n";
  }
}

}  // namespace nmp
