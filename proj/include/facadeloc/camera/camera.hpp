#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "facadeloc/core/errors.hpp"
#include "facadeloc/core/types.hpp"

namespace facadeloc {

// Pinhole intrinsics in continuous pixel coordinates (see PixelPoint). Images
// and keypoints are assumed to be undistorted already.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw ValidationError("intrinsics: focal lengths must be positive");
    if (!std::isfinite(cx) || !std::isfinite(cy)) throw ValidationError("intrinsics: non-finite principal point");
    if (width < 0 || height < 0) throw ValidationError("intrinsics: negative image size");
  }

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }

  // Unit-plane direction (not normalized) through a pixel.
  Vec3 unproject(const PixelPoint& p) const { return {(p.u - cx) / fx, (p.v - cy) / fy, 1.0}; }
};

// R * x + t evaluated with error-free transformations (Ogita-Rump-Oishi Dot2),
// as if in twice the working precision. World coordinates of ~1e6 m would
// otherwise lose ~1e-9 m to cancellation against t.
inline Vec3 affine_dot2(const Mat3& r, const Vec3& x, const Vec3& t) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    double s = t(i);
    double c = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double p = r(i, j) * x(j);
      const double pe = std::fma(r(i, j), x(j), -p);
      const double sum = s + p;
      const double z = sum - s;
      const double se = (s - (sum - z)) + (p - z);
      s = sum;
      c += pe + se;
    }
    out(i) = s + c;
  }
  return out;
}

// World-to-camera transform: x_cam = R * x_world + t. t is the world origin
// expressed in the camera frame; the camera center is -R^T t.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 camera_center() const { return -R.transpose() * t; }
  Vec3 transform(const WorldPoint& x) const { return affine_dot2(R, x, t); }

  static Pose from_center(const Mat3& r, const Vec3& center) { return {r, -r * center}; }
};

// Nearest rotation in the Frobenius sense.
inline Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

// Accepts a rotation matrix that is orthonormal to 1e-9 as is, re-projects
// it onto SO(3) when off by less than 1e-6, and rejects anything worse.
inline Mat3 validated_rotation(const Mat3& r) {
  if (!r.allFinite()) throw ValidationError("rotation has non-finite entries");
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = r.determinant();
  if (ortho <= 1e-9 && std::abs(det - 1.0) <= 1e-9) return r;
  if (ortho < 1e-6 && std::abs(det - 1.0) < 1e-6) return nearest_rotation(r);
  throw ValidationError("matrix is not a rotation (orthonormality error " + std::to_string(ortho) +
                        ", det " + std::to_string(det) + ")");
}

struct CameraRecord {
  std::string image_path;
  Intrinsics intrinsics;
  Pose gt_pose;
  std::vector<std::string> tags;
};

inline std::optional<PixelPoint> try_project(const WorldPoint& x, const Pose& pose, const Intrinsics& k) {
  const Vec3 p = pose.transform(x);
  if (!(p.z() > 0)) return std::nullopt;
  return PixelPoint{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

inline PixelPoint project(const WorldPoint& x, const Pose& pose, const Intrinsics& k) {
  if (!x.allFinite()) throw ValidationError("project: non-finite world point");
  auto p = try_project(x, pose, k);
  if (!p) throw BehindCameraError("project: point is behind the camera");
  return *p;
}

struct CenteredPoints {
  std::vector<WorldPoint> points;
  WorldPoint offset = WorldPoint::Zero();
};

// Subtracts the centroid. The mean is accumulated relative to the first point
// so that UTM-sized coordinates do not lose digits.
inline CenteredPoints center_points(std::span<const WorldPoint> points) {
  if (points.empty()) throw ValidationError("center_points: empty point list");
  const WorldPoint ref = points.front();
  Vec3 acc = Vec3::Zero();
  for (const auto& p : points) acc += p - ref;
  CenteredPoints out;
  out.offset = ref + acc / static_cast<double>(points.size());
  out.points.reserve(points.size());
  for (const auto& p : points) out.points.push_back(p - out.offset);
  return out;
}

// Ground-truth translation expressed for centered world coordinates.
inline Vec3 offset_gt_translation(const Pose& gt, const WorldPoint& offset) {
  return affine_dot2(gt.R, offset, gt.t);
}

inline double rotation_error_deg(const Mat3& ra, const Mat3& rb) {
  const double c = std::clamp(((ra.transpose() * rb).trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near 0; use the skew part for small angles.
  const Mat3 d = ra.transpose() * rb;
  const double s = 0.5 * Vec3(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)).norm();
  return std::atan2(s, c) * 180.0 / std::numbers::pi;
}

inline double translation_error_m(const Vec3& ta, const Vec3& tb) { return (ta - tb).norm(); }

// Rodrigues exponential map.
inline Mat3 rotation_from_axis_angle(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// JSON: {"image_path", "intrinsics": {fx, fy, cx, cy, width, height},
//        "pose": {"R": [9 numbers, row-major, world->camera], "t": [3]}, "tags": [...]}
inline nlohmann::json pose_to_json(const Pose& p) {
  nlohmann::json r = nlohmann::json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(p.R(i, j));
  return {{"R", r}, {"t", {p.t.x(), p.t.y(), p.t.z()}}};
}

inline Pose pose_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("R") || !j.contains("t")) throw ValidationError("pose: expected {R, t}");
  const auto& r = j.at("R");
  const auto& t = j.at("t");
  if (!r.is_array() || r.size() != 9) throw ValidationError("pose.R: expected 9 numbers (row-major)");
  if (!t.is_array() || t.size() != 3) throw ValidationError("pose.t: expected 3 numbers");
  Mat3 m;
  for (int i = 0; i < 9; ++i) {
    if (!r[i].is_number()) throw ValidationError("pose.R[" + std::to_string(i) + "]: not a number");
    m(i / 3, i % 3) = r[i].get<double>();
  }
  Vec3 tv;
  for (int i = 0; i < 3; ++i) {
    if (!t[i].is_number()) throw ValidationError("pose.t[" + std::to_string(i) + "]: not a number");
    tv(i) = t[i].get<double>();
  }
  return {validated_rotation(m), tv};
}

inline nlohmann::json camera_to_json(const CameraRecord& c) {
  const auto& k = c.intrinsics;
  return {{"schema", "camera/1"},
          {"image_path", c.image_path},
          {"intrinsics",
           {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
          {"pose", pose_to_json(c.gt_pose)},
          {"tags", c.tags}};
}

inline CameraRecord camera_from_json(const nlohmann::json& j) {
  try {
    CameraRecord c;
    c.image_path = j.at("image_path").get<std::string>();
    const auto& k = j.at("intrinsics");
    c.intrinsics.fx = k.at("fx").get<double>();
    c.intrinsics.fy = k.at("fy").get<double>();
    c.intrinsics.cx = k.at("cx").get<double>();
    c.intrinsics.cy = k.at("cy").get<double>();
    c.intrinsics.width = k.value("width", 0);
    c.intrinsics.height = k.value("height", 0);
    c.intrinsics.validate();
    c.gt_pose = pose_from_json(j.at("pose"));
    if (j.contains("tags")) c.tags = j.at("tags").get<std::vector<std::string>>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("camera record: ") + e.what());
  }
}

}  // namespace facadeloc
