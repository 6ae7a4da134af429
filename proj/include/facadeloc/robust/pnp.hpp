#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "facadeloc/camera/camera.hpp"
#include "facadeloc/robust/lm_refine.hpp"
#include "facadeloc/robust/p3p.hpp"
#include "facadeloc/robust/ransac.hpp"

namespace facadeloc {

struct PoseEstimate {
  Pose pose;
  std::vector<bool> inlier_mask;
  int num_iterations = 0;
  double mean_inlier_reproj_px = 0.0;
  bool success = false;

  std::size_t num_inliers() const {
    std::size_t n = 0;
    for (bool b : inlier_mask) n += b ? 1 : 0;
    return n;
  }
};

// Pixel distance between the observation and the projection; +inf when the
// point is not in front of the camera.
inline double reprojection_error(const Pose& pose, const Intrinsics& k, const WorldPoint& x, const PixelPoint& obs) {
  auto p = try_project(x, pose, k);
  if (!p) return std::numeric_limits<double>::infinity();
  return std::hypot(p->u - obs.u, p->v - obs.v);
}

// Absolute pose by RANSAC over P3P on three sampled points, with a fourth
// sampled point selecting among the P3P candidates. The winning consensus set
// is refined with Levenberg-Marquardt and the inliers are recomputed.
// World points should be centered by the caller (see center_points).
// Failures are reported through `success`, never thrown.
inline PoseEstimate pnp_ransac(std::span<const WorldPoint> world, std::span<const PixelPoint> pixels,
                               const Intrinsics& k, const RansacConfig& cfg) {
  cfg.validate();
  if (world.size() != pixels.size()) throw ValidationError("pnp_ransac: world and pixel counts differ");
  PoseEstimate out;
  const std::size_t n = world.size();
  out.inlier_mask.assign(n, false);
  if (n < 4) return out;

  std::vector<Vec3> rays(n);
  for (std::size_t i = 0; i < n; ++i) rays[i] = k.unproject(pixels[i]).normalized();

  auto error = [&](const Pose& p, std::size_t i) { return reprojection_error(p, k, world[i], pixels[i]); };
  auto fit = [&](std::span<const std::size_t> s) -> std::optional<Pose> {
    std::vector<Pose> candidates;
    try {
      candidates = p3p_solve({world[s[0]], world[s[1]], world[s[2]]}, {rays[s[0]], rays[s[1]], rays[s[2]]});
    } catch (const GeometryError&) {
      return std::nullopt;
    }
    std::optional<Pose> best;
    double best_err = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
      const double e = error(c, s[3]);
      if (e < best_err) {
        best_err = e;
        best = c;
      }
    }
    return best;
  };

  auto r = ransac<Pose>(n, 4, 3, cfg, fit, error);
  out.num_iterations = r.iterations;
  if (!r.model || r.num_inliers < 4) return out;

  Pose pose = *r.model;
  std::vector<bool> mask = r.inliers;
  try {
    pose = lm_refine_pose(pose, world, pixels, k, mask).pose;
  } catch (const ValidationError&) {
    // consensus set unusable for refinement; keep the minimal-sample pose
  }
  std::size_t count = 0;
  double sum = 0;
  std::vector<bool> refined(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = error(pose, i);
    refined[i] = is_inlier(e, cfg.threshold);
    if (refined[i]) {
      ++count;
      sum += e;
    }
  }
  if (count < 4) return out;
  out.pose = pose;
  out.inlier_mask = std::move(refined);
  out.mean_inlier_reproj_px = sum / static_cast<double>(count);
  out.success = true;
  return out;
}

}  // namespace facadeloc
