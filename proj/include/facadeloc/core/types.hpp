#pragma once

#include <Eigen/Core>

namespace facadeloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Continuous pixel position. Origin is the top-left corner of the image, u to
// the right, v down; the center of pixel (k, l) sits at (k + 0.5, l + 0.5).
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

// Texture parameterization coordinate, s right and t up.
struct StPoint {
  double s = 0.0;
  double t = 0.0;

  friend bool operator==(const StPoint&, const StPoint&) = default;
};

// East, North, Up in meters.
using WorldPoint = Vec3;

inline Vec2 to_vec(const PixelPoint& p) { return {p.u, p.v}; }
inline Vec2 to_vec(const StPoint& p) { return {p.s, p.t}; }

}  // namespace facadeloc
