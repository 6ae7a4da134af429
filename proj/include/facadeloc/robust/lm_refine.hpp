#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "facadeloc/camera/camera.hpp"
#include "facadeloc/core/errors.hpp"

namespace facadeloc {

// Six-parameter pose update: rotation by the axis-angle vector omega applied
// on the left, then translation offset.  R' = exp([omega]x) R,  t' = t + dt.
using PoseDelta = Eigen::Matrix<double, 6, 1>;

inline Pose apply_delta(const Pose& p, const PoseDelta& d) {
  return {rotation_from_axis_angle(d.head<3>()) * p.R, p.t + d.tail<3>()};
}

struct ReprojectionSystem {
  Eigen::VectorXd residuals;                     // 2N: (u - u_obs, v - v_obs)
  Eigen::Matrix<double, Eigen::Dynamic, 6> jacobian;  // d residuals / d PoseDelta at zero
};

// Residuals and analytic Jacobian of the reprojection error over the
// selected points. Points at or behind the camera contribute zero rows.
inline ReprojectionSystem reprojection_system(const Pose& pose, std::span<const WorldPoint> world,
                                              std::span<const PixelPoint> pixels, const Intrinsics& k,
                                              std::span<const std::size_t> indices) {
  ReprojectionSystem sys;
  const auto n = static_cast<Eigen::Index>(indices.size());
  sys.residuals = Eigen::VectorXd::Zero(2 * n);
  sys.jacobian = Eigen::Matrix<double, Eigen::Dynamic, 6>::Zero(2 * n, 6);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t i = indices[static_cast<std::size_t>(r)];
    const Vec3 rx = pose.R * world[i];
    const Vec3 p = rx + pose.t;
    if (!(p.z() > 0)) continue;
    const double iz = 1.0 / p.z();
    sys.residuals(2 * r) = k.fx * p.x() * iz + k.cx - pixels[i].u;
    sys.residuals(2 * r + 1) = k.fy * p.y() * iz + k.cy - pixels[i].v;
    Eigen::Matrix<double, 2, 3> dproj;
    dproj << k.fx * iz, 0, -k.fx * p.x() * iz * iz, 0, k.fy * iz, -k.fy * p.y() * iz * iz;
    sys.jacobian.block<2, 3>(2 * r, 0) = dproj * (-skew(rx));
    sys.jacobian.block<2, 3>(2 * r, 3) = dproj;
  }
  return sys;
}

struct RefineOptions {
  int max_iterations = 100;
  double relative_tolerance = 1e-10;
};

struct RefineResult {
  Pose pose;
  double initial_cost = 0.0;  // 0.5 * sum of squared residuals
  double final_cost = 0.0;
  int iterations = 0;
  bool diverged = false;
};

// Levenberg-Marquardt on the reprojection error of the points selected by
// inlier_mask. Steps that do not lower the cost are rejected and the damping
// is increased, so the returned cost never exceeds the initial one.
inline RefineResult lm_refine_pose(const Pose& initial, std::span<const WorldPoint> world,
                                   std::span<const PixelPoint> pixels, const Intrinsics& k,
                                   const std::vector<bool>& inlier_mask, const RefineOptions& opt = {}) {
  if (world.size() != pixels.size() || inlier_mask.size() != world.size()) {
    throw ValidationError("lm_refine_pose: input sizes differ");
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < world.size(); ++i) {
    if (inlier_mask[i]) idx.push_back(i);
  }
  if (idx.size() < 4) throw ValidationError("lm_refine_pose: need >= 4 inliers");
  for (auto i : idx) {
    if (!((initial.R * world[i] + initial.t).z() > 0)) {
      throw ValidationError("lm_refine_pose: initial pose has inliers behind the camera");
    }
  }

  auto cost_of = [&](const Pose& p) {
    double c = 0;
    for (auto i : idx) {
      auto q = try_project(world[i], p, k);
      if (!q) return std::numeric_limits<double>::infinity();
      c += (q->u - pixels[i].u) * (q->u - pixels[i].u) + (q->v - pixels[i].v) * (q->v - pixels[i].v);
    }
    return 0.5 * c;
  };

  RefineResult res;
  res.pose = initial;
  res.initial_cost = cost_of(initial);
  double cost = res.initial_cost;
  double lambda = 1e-3;
  for (int it = 0; it < opt.max_iterations && cost > 0; ++it) {
    res.iterations = it + 1;
    const auto sys = reprojection_system(res.pose, world, pixels, k, idx);
    const Eigen::Matrix<double, 6, 6> h = sys.jacobian.transpose() * sys.jacobian;
    const PoseDelta g = sys.jacobian.transpose() * sys.residuals;
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::Matrix<double, 6, 6> damped = h;
      for (int d = 0; d < 6; ++d) damped(d, d) += lambda * std::max(h(d, d), 1e-12);
      const PoseDelta step = damped.ldlt().solve(-g);
      const Pose candidate = apply_delta(res.pose, step);
      const double c = cost_of(candidate);
      if (step.allFinite() && c < cost) {
        const double rel = (cost - c) / cost;
        res.pose = candidate;
        cost = c;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (rel < opt.relative_tolerance) it = opt.max_iterations;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  res.final_cost = cost;
  if (!(res.final_cost <= res.initial_cost)) {
    res.pose = initial;
    res.final_cost = res.initial_cost;
    res.diverged = true;
  }
  return res;
}

}  // namespace facadeloc
