#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "facadeloc/camera/camera.hpp"
#include "facadeloc/core/errors.hpp"
#include "facadeloc/features/matchset.hpp"
#include "facadeloc/geo/geo_transform.hpp"
#include "facadeloc/gml/textured_face.hpp"
#include "facadeloc/robust/homography.hpp"
#include "facadeloc/robust/ransac.hpp"

namespace facadeloc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Per match: texture keypoint -> world point on the face -> projection with
// the ground-truth pose, compared against the camera-image keypoint.
inline std::vector<double> reprojection_errors(const MatchSet& ms, const TexturedFace& face,
                                               const CameraRecord& cam) {
  const FaceMapper mapper(face);
  std::vector<double> out;
  out.reserve(ms.matches.size());
  for (const auto& m : ms.matches) {
    const auto& k0 = ms.keypoints0[m.index0];
    const auto& k1 = ms.keypoints1[m.index1];
    const WorldPoint x = mapper({k0.x, k0.y});
    auto p = try_project(x, cam.gt_pose, cam.intrinsics);
    out.push_back(p ? std::hypot(p->u - k1.x, p->v - k1.y) : kInf);
  }
  return out;
}

// Fraction of all errors that are finite and <= threshold. Empty input gives 0.
inline double precision_at(std::span<const double> errors, double threshold) {
  if (!(threshold > 0)) throw ValidationError("precision threshold must be positive");
  if (errors.empty()) return 0.0;
  std::size_t hit = 0;
  for (double e : errors) hit += (std::isfinite(e) && e <= threshold) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(errors.size());
}

inline std::map<double, double> precision_at(std::span<const double> errors, std::span<const double> thresholds) {
  std::map<double, double> out;
  for (double t : thresholds) out[t] = precision_at(errors, t);
  return out;
}

// Normalized area under the recall curve r(e) = #{errors <= e} / N on
// [0, max_threshold]. The curve is a right-continuous step function, so the
// integral is exact: sum over errors below the threshold of (T - e_i), / (N T).
// Failures are +inf and only count in N.
inline double auc(std::span<const double> errors, double max_threshold) {
  if (!(max_threshold > 0)) throw ValidationError("auc: max_threshold must be positive");
  if (errors.empty()) return 0.0;
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  double area = 0.0;
  for (double e : sorted) {
    if (!(e < max_threshold)) break;
    area += max_threshold - std::max(e, 0.0);
  }
  return area / (static_cast<double>(errors.size()) * max_threshold);
}

inline double mean_average_accuracy(std::span<const double> aucs) {
  if (aucs.empty()) throw ValidationError("mean_average_accuracy: empty list");
  return std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
}

// Median by order statistics; even counts average the two middle values.
// Infinities sort last, so a median touching a failure is infinite.
inline double median(std::vector<double> values) {
  if (values.empty()) return kInf;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  const double a = values[n / 2 - 1];
  const double b = values[n / 2];
  return std::isinf(b) ? b : 0.5 * (a + b);
}

// Mean distance between the images of the four image corners under both
// homographies.
inline double homography_corner_error(const Homography& est, const Homography& gt, double width, double height) {
  const std::array<Vec2, 4> corners{Vec2(0, 0), Vec2(width, 0), Vec2(width, height), Vec2(0, height)};
  double sum = 0;
  for (const auto& c : corners) {
    auto a = est.apply(c);
    auto b = gt.apply(c);
    if (!a || !b) return kInf;
    sum += (*a - *b).norm();
  }
  return sum / 4.0;
}

}  // namespace facadeloc
