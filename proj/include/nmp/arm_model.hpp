#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nmp/types.hpp"

namespace nmp {

struct JointLimits {
  Vec7 lower = Vec7::Constant(-1.0);
  Vec7 upper = Vec7::Constant(1.0);

  /// Throws InvalidArgument unless lower < upper componentwise and finite.
  void validate() const;
  bool contains(const Vec7& q) const;
};

/// Rigid transform; kept as rotation + translation to stay clear of Eigen's
/// over-aligned types inside standard containers.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
};

/// Modified DH step: Rx(alpha) * Tx(a) * Rz(theta) * Tz(d).
struct MdhParams {
  double a = 0.0;
  double d = 0.0;
  double alpha = 0.0;
};

/// Capsule rigidly attached to a link, endpoints in that link's frame.
struct LinkCapsule {
  int link = 0;  // 0 = base, 1..7 = moving links
  Vec3 from = Vec3::Zero();
  Vec3 to = Vec3::Zero();
  double radius = 0.0;
};

struct ArmGeometry {
  int schema_version = 1;
  std::string name;
  std::array<MdhParams, kDof> joints{};
  MdhParams flange{};
  JointLimits limits;
  Vec7 home = Vec7::Zero();
  std::vector<LinkCapsule> capsules;
  std::vector<std::pair<int, int>> self_collision_pairs;

  void validate() const;
};

inline constexpr int kArmSchemaVersion = 1;

ArmGeometry parse_arm(std::istream& in);
ArmGeometry load_arm(const std::filesystem::path& path);
void write_arm(std::ostream& out, const ArmGeometry& arm);

/// The compiled-in Franka-class arm (data/franka_class.arm).
std::shared_ptr<const ArmGeometry> default_arm();

NormalizedConfig normalize(const Configuration& c, const JointLimits& lim);
Configuration denormalize(const NormalizedConfig& s, const JointLimits& lim);

/// Link frames: index 0 is the base, 1..7 the moving links, 8 the flange.
inline constexpr int kFrameCount = kDof + 2;

struct FkResult {
  std::array<Pose, kFrameCount> frames;
  Vec3 ee_position = Vec3::Zero();
};

/// Pure chain evaluation; no limit checks.
FkResult forward_kinematics(const Configuration& c, const ArmGeometry& geom);
Vec3 ee_position(const Configuration& c, const ArmGeometry& geom);

/// Scales delta onto the a_max ball when it lies outside; otherwise returns it unchanged.
Vec7 clip_action(const Vec7& delta, double a_max);

}  // namespace nmp
