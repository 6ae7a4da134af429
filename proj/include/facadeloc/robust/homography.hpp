#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "facadeloc/core/errors.hpp"
#include "facadeloc/core/types.hpp"
#include "facadeloc/robust/ransac.hpp"

namespace facadeloc {

// Plane projective map, scaled so that H(2,2) == 1 whenever it is nonzero.
struct Homography {
  Mat3 H = Mat3::Identity();

  static Homography normalized(const Mat3& m) {
    Homography h{m};
    if (std::abs(m(2, 2)) > 1e-15) h.H /= m(2, 2);
    return h;
  }

  // Inhomogeneous image of p; nullopt when p maps to infinity.
  std::optional<Vec2> apply(const Vec2& p) const {
    const Vec3 q = H * Vec3(p.x(), p.y(), 1.0);
    if (q.z() == 0.0 || !std::isfinite(q.z())) return std::nullopt;
    return Vec2(q.x() / q.z(), q.y() / q.z());
  }

  Homography inverse() const { return normalized(H.inverse()); }
};

namespace homography_detail {

// Similarity moving the centroid to the origin with mean distance sqrt(2).
inline Mat3 normalizer(std::span<const Vec2> pts) {
  Vec2 c = Vec2::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double d = 0;
  for (const auto& p : pts) d += (p - c).norm();
  d /= static_cast<double>(pts.size());
  const double s = d > 0 ? std::sqrt(2.0) / d : 1.0;
  Mat3 t;
  t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return t;
}

inline bool collinear(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 u = b - a;
  const Vec2 v = c - a;
  const double scale = std::max({u.squaredNorm(), v.squaredNorm(), 1e-300});
  return std::abs(u.x() * v.y() - u.y() * v.x()) <= 1e-10 * scale;
}

}  // namespace homography_detail

// Hartley-normalized direct linear transform mapping pts0 onto pts1.
inline Homography homography_dlt(std::span<const Vec2> pts0, std::span<const Vec2> pts1) {
  using namespace homography_detail;
  const std::size_t n = pts0.size();
  if (n < 4 || pts1.size() != n) throw GeometryError("homography_dlt: need >= 4 correspondences");
  if (n == 4) {
    for (std::size_t i = 0; i < 4; ++i) {
      const std::size_t a = (i + 1) % 4, b = (i + 2) % 4;
      if (collinear(pts0[i], pts0[a], pts0[b]) || collinear(pts1[i], pts1[a], pts1[b])) {
        throw GeometryError("homography_dlt: three of the four points are collinear");
      }
    }
  }
  const Mat3 t0 = normalizer(pts0);
  const Mat3 t1 = normalizer(pts1);
  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = t0 * Vec3(pts0[i].x(), pts0[i].y(), 1.0);
    const Vec3 q = t1 * Vec3(pts1[i].x(), pts1[i].y(), 1.0);
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    a.row(2 * i) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }
  // Pad to a square system so the full null space is available for n == 4.
  Eigen::MatrixXd square = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(a.rows(), 9), 9);
  square.topRows(a.rows()) = a;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(square, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(7) > 1e-10 * sv(0))) throw GeometryError("homography_dlt: degenerate configuration (rank deficient)");
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Mat3 hm = t1.inverse() * hn * t0;
  if (std::abs(hm.determinant()) < 1e-300) throw GeometryError("homography_dlt: singular estimate");
  return Homography::normalized(hm);
}

struct HomographyEstimate {
  Homography homography;
  std::vector<bool> inlier_mask;
  int num_iterations = 0;
  bool success = false;
};

// RANSAC over 4-point DLT, refit on all inliers at the end.
inline HomographyEstimate homography_ransac(std::span<const Vec2> pts0, std::span<const Vec2> pts1,
                                            const RansacConfig& cfg) {
  HomographyEstimate out;
  out.inlier_mask.assign(pts0.size(), false);
  if (pts0.size() != pts1.size()) throw ValidationError("homography_ransac: point lists differ in length");
  auto fit = [&](std::span<const std::size_t> s) -> std::optional<Homography> {
    std::vector<Vec2> a, b;
    for (auto i : s) {
      a.push_back(pts0[i]);
      b.push_back(pts1[i]);
    }
    try {
      return homography_dlt(a, b);
    } catch (const GeometryError&) {
      return std::nullopt;
    }
  };
  auto err = [&](const Homography& h, std::size_t i) {
    auto q = h.apply(pts0[i]);
    return q ? (*q - pts1[i]).norm() : std::numeric_limits<double>::infinity();
  };
  auto r = ransac<Homography>(pts0.size(), 4, 4, cfg, fit, err);
  out.num_iterations = r.iterations;
  if (!r.model || r.num_inliers < 4) return out;
  std::vector<Vec2> a, b;
  for (std::size_t i = 0; i < pts0.size(); ++i) {
    if (r.inliers[i]) {
      a.push_back(pts0[i]);
      b.push_back(pts1[i]);
    }
  }
  try {
    out.homography = homography_dlt(a, b);
  } catch (const GeometryError&) {
    out.homography = *r.model;
  }
  for (std::size_t i = 0; i < pts0.size(); ++i) out.inlier_mask[i] = is_inlier(err(out.homography, i), cfg.threshold);
  out.success = true;
  return out;
}

}  // namespace facadeloc
