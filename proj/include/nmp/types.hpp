#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace nmp {

inline constexpr int kDof = 7;

using Vec3 = Eigen::Vector3d;
using Vec7 = Eigen::Matrix<double, kDof, 1>;

/// Joint angles in radians.
struct Configuration {
  Vec7 q = Vec7::Zero();
};

/// Joint state affinely mapped onto [-1, 1]^7 by the joint limits.
struct NormalizedConfig {
  Vec7 s = Vec7::Zero();
};

}  // namespace nmp
