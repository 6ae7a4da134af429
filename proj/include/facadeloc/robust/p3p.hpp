#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "facadeloc/camera/camera.hpp"
#include "facadeloc/core/errors.hpp"

namespace facadeloc {

namespace p3p_detail {

// Real roots of c[0] x^n + ... + c[n], leading near-zero coefficients dropped.
// Companion-matrix eigenvalues followed by Newton polishing.
inline std::vector<double> real_roots(std::vector<double> c) {
  double scale = 0;
  for (double v : c) scale = std::max(scale, std::abs(v));
  if (scale == 0) return {};
  while (c.size() > 1 && std::abs(c.front()) < 1e-14 * scale) c.erase(c.begin());
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg < 1) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 0; i < deg; ++i) comp(0, i) = -c[i + 1] / c[0];
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  auto eval = [&](double x, double& d) {
    double p = 0;
    d = 0;
    for (int i = 0; i <= deg; ++i) {
      d = d * x + p;
      p = p * x + c[i];
    }
    return p;
  };
  std::vector<double> out;
  for (int i = 0; i < deg; ++i) {
    const std::complex<double> z = es.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-6 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int k = 0; k < 8; ++k) {
      double d;
      const double p = eval(x, d);
      if (d == 0) break;
      const double step = p / d;
      x -= step;
      if (std::abs(step) <= 1e-16 * (1.0 + std::abs(x))) break;
    }
    out.push_back(x);
  }
  return out;
}

// Rigid transform with cam_i = R * world_i + t for three exact pairs.
inline Pose align_points(const std::array<Vec3, 3>& world, const std::array<Vec3, 3>& cam) {
  const Vec3 cw = (world[0] + world[1] + world[2]) / 3.0;
  const Vec3 cc = (cam[0] + cam[1] + cam[2]) / 3.0;
  Mat3 h = Mat3::Zero();
  for (int i = 0; i < 3; ++i) h += (world[i] - cw) * (cam[i] - cc).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
  Pose p;
  p.R = svd.matrixV() * d * svd.matrixU().transpose();
  p.t = cc - p.R * cw;
  return p;
}

}  // namespace p3p_detail

// Minimal absolute pose from three world points and their unit bearing
// vectors (camera frame). Grunert's distance formulation reduced to a quartic
// in the depth ratio s3/s1; depths are Newton-polished on the three law-of-
// cosines equations before the rigid alignment. Returns up to four poses.
inline std::vector<Pose> p3p_solve(const std::array<WorldPoint, 3>& world, const std::array<Vec3, 3>& rays) {
  using namespace p3p_detail;
  const Vec3 e1 = world[1] - world[0];
  const Vec3 e2 = world[2] - world[0];
  const double size = std::max(e1.squaredNorm(), e2.squaredNorm());
  if (!(e1.cross(e2).norm() > 1e-10 * size) || size == 0) throw GeometryError("p3p: world points are collinear");
  std::array<Vec3, 3> j;
  for (int i = 0; i < 3; ++i) j[i] = rays[i].normalized();

  const double a2 = (world[1] - world[2]).squaredNorm();
  const double b2 = (world[0] - world[2]).squaredNorm();
  const double c2 = (world[0] - world[1]).squaredNorm();
  const double ca = j[1].dot(j[2]);
  const double cb = j[0].dot(j[2]);
  const double cg = j[0].dot(j[1]);

  const double amc = (a2 - c2) / b2;
  const double apc = (a2 + c2) / b2;
  const double a4 = (amc - 1) * (amc - 1) - 4 * c2 / b2 * ca * ca;
  const double a3 = 4 * (amc * (1 - amc) * cb - (1 - apc) * ca * cg + 2 * c2 / b2 * ca * ca * cb);
  const double a2c = 2 * (amc * amc - 1 + 2 * amc * amc * cb * cb + 2 * ((b2 - c2) / b2) * ca * ca -
                          4 * apc * ca * cb * cg + 2 * ((b2 - a2) / b2) * cg * cg);
  const double a1 = 4 * (-amc * (1 + amc) * cb + 2 * a2 / b2 * cg * cg * cb - (1 - apc) * ca * cg);
  const double a0 = (1 + amc) * (1 + amc) - 4 * a2 / b2 * cg * cg;

  std::vector<Pose> out;
  std::vector<Vec3> depths;
  for (double v : real_roots({a4, a3, a2c, a1, a0})) {
    if (!(v > 0)) continue;
    const double s1sq = b2 / (1 + v * v - 2 * v * cb);
    if (!(s1sq > 0)) continue;
    // u from the closed form plus both roots of the c-side law of cosines.
    // Near-symmetric triangles make the closed form 0/0 (double root in v), so
    // the quadratic roots are screened against the a side instead.
    std::vector<double> us;
    const double den = 2 * (cg - v * ca);
    if (den != 0) us.push_back(((-1 + amc) * v * v - 2 * amc * cb * v + 1 + amc) / den);
    const double disc = cg * cg - 1 + c2 / s1sq;
    if (disc >= 0) {
      for (double u : {cg + std::sqrt(disc), cg - std::sqrt(disc)}) {
        if (std::abs(s1sq * (u * u + v * v - 2 * u * v * ca) - a2) < 1e-3 * a2) us.push_back(u);
      }
    }
    for (double u : us) {
      if (!(u > 0)) continue;
      Vec3 s(std::sqrt(s1sq), 0, 0);
      s(1) = u * s(0);
      s(2) = v * s(0);
      for (int k = 0; k < 8; ++k) {
        Vec3 f(s(1) * s(1) + s(2) * s(2) - 2 * s(1) * s(2) * ca - a2,
               s(0) * s(0) + s(2) * s(2) - 2 * s(0) * s(2) * cb - b2,
               s(0) * s(0) + s(1) * s(1) - 2 * s(0) * s(1) * cg - c2);
        Mat3 jac;
        jac << 0, 2 * s(1) - 2 * s(2) * ca, 2 * s(2) - 2 * s(1) * ca,
               2 * s(0) - 2 * s(2) * cb, 0, 2 * s(2) - 2 * s(0) * cb,
               2 * s(0) - 2 * s(1) * cg, 2 * s(1) - 2 * s(0) * cg, 0;
        const Eigen::FullPivLU<Mat3> lu(jac);
        if (!lu.isInvertible()) break;
        const Vec3 step = lu.solve(f);
        if (!step.allFinite()) break;
        s -= step;
      }
      if (!(s.minCoeff() > 0)) continue;
      const Vec3 f(s(1) * s(1) + s(2) * s(2) - 2 * s(1) * s(2) * ca - a2,
                   s(0) * s(0) + s(2) * s(2) - 2 * s(0) * s(2) * cb - b2,
                   s(0) * s(0) + s(1) * s(1) - 2 * s(0) * s(1) * cg - c2);
      if (f.cwiseAbs().maxCoeff() > 1e-8 * size) continue;
      if (std::any_of(depths.begin(), depths.end(), [&](const Vec3& d) { return (d - s).norm() < 1e-9 * s.norm(); }))
        continue;
      depths.push_back(s);
      out.push_back(align_points(world, {s(0) * j[0], s(1) * j[1], s(2) * j[2]}));
    }
  }
  return out;
}

}  // namespace facadeloc
