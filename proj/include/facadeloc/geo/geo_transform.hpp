#pragma once

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "facadeloc/core/errors.hpp"
#include "facadeloc/core/types.hpp"
#include "facadeloc/gml/textured_face.hpp"

namespace facadeloc {

// Face-aligned affine frame linking st space to world space. The st offset
// from origin_st is expressed in the (b1, b2) basis and the same coefficients
// are applied to (w1, w2) in world space.
struct FaceBasis {
  Vec2 origin_st = Vec2::Zero();
  WorldPoint origin_world = WorldPoint::Zero();
  Vec2 b1 = Vec2::Zero();
  Vec2 b2 = Vec2::Zero();
  Vec3 w1 = Vec3::Zero();
  Vec3 w2 = Vec3::Zero();
  Mat2 a_inv = Mat2::Zero();
  std::array<std::size_t, 3> vertices{0, 1, 2};  // ring indices the basis was built from
};

inline constexpr double kBasisDetEpsilon = 1e-12;

inline StPoint pixel_to_st(const PixelPoint& p, double width, double height) {
  if (!(width > 0) || !(height > 0)) throw ValidationError("pixel_to_st: image size must be positive");
  if (!std::isfinite(p.u) || !std::isfinite(p.v)) throw ValidationError("pixel_to_st: non-finite pixel");
  return {p.u / width, 1.0 - p.v / height};
}

// Inverse of pixel_to_st.
inline PixelPoint st_to_pixel(const StPoint& p, double width, double height) {
  return {p.s * width, (1.0 - p.t) * height};
}

// Uses the first vertex triple (0, j, k), j < k in ring order, whose st edges
// span a non-singular matrix and whose world edges are not parallel.
inline FaceBasis build_face_basis(const TexturedFace& face) {
  const std::size_t n = face.st_ring.size();
  if (n < 3 || face.world_ring.size() != n) {
    throw GeometryError("face '" + face.face_id + "': need >= 3 corresponding vertices");
  }
  FaceBasis basis;
  basis.origin_st = to_vec(face.st_ring[0]);
  basis.origin_world = face.world_ring[0];
  for (std::size_t j = 1; j + 1 < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      const Vec2 b1 = to_vec(face.st_ring[j]) - basis.origin_st;
      const Vec2 b2 = to_vec(face.st_ring[k]) - basis.origin_st;
      const Vec3 w1 = face.world_ring[j] - basis.origin_world;
      const Vec3 w2 = face.world_ring[k] - basis.origin_world;
      Mat2 a;
      a << b1.x(), b2.x(), b1.y(), b2.y();
      if (std::abs(a.determinant()) > kBasisDetEpsilon && w1.cross(w2).norm() > kBasisDetEpsilon) {
        basis.b1 = b1;
        basis.b2 = b2;
        basis.w1 = w1;
        basis.w2 = w2;
        basis.a_inv = a.inverse();
        basis.vertices = {0, j, k};
        return basis;
      }
    }
  }
  throw GeometryError("face '" + face.face_id + "': all vertex triples are degenerate");
}

inline WorldPoint st_to_world(const StPoint& p, const FaceBasis& basis) {
  if (!std::isfinite(p.s) || !std::isfinite(p.t)) throw ValidationError("st_to_world: non-finite input");
  const Vec2 xb = basis.a_inv * (to_vec(p) - basis.origin_st);
  // offset first: only one rounding at the (large) world magnitude
  return basis.origin_world + Vec3(xb.x() * basis.w1 + xb.y() * basis.w2);
}

// Precomputed pixel -> world mapping for one face.
class FaceMapper {
 public:
  explicit FaceMapper(const TexturedFace& face) : basis_(build_face_basis(face)) {
    if (!face.has_image_size()) {
      throw ValidationError("face '" + face.face_id + "': texture size not resolved");
    }
    width_ = face.image_width;
    height_ = face.image_height;
  }

  WorldPoint operator()(const PixelPoint& p) const { return st_to_world(pixel_to_st(p, width_, height_), basis_); }

  const FaceBasis& basis() const { return basis_; }

 private:
  FaceBasis basis_;
  double width_ = 0;
  double height_ = 0;
};

inline WorldPoint pixel_to_world(const PixelPoint& p, const TexturedFace& face) {
  return FaceMapper(face)(p);
}

// Keypoints detected at integer pixel (k, l) sit at the pixel center.
inline PixelPoint pixel_center(int k, int l) { return {k + 0.5, l + 0.5}; }

// Even-odd point in polygon test in st space. Points outside the textured
// polygon are still transformed; callers may use this to drop them.
inline bool st_inside_polygon(const StPoint& p, const TexturedFace& face) {
  bool inside = false;
  const auto& r = face.st_ring;
  for (std::size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
    if ((r[i].t > p.t) != (r[j].t > p.t)) {
      const double x = (r[j].s - r[i].s) * (p.t - r[i].t) / (r[j].t - r[i].t) + r[i].s;
      if (p.s < x) inside = !inside;
    }
  }
  return inside;
}

struct FaceDiagnostics {
  // Largest distance between a ring vertex and its image under the st->world map.
  double max_vertex_residual_m = 0.0;
  // Largest distance of a ring vertex to the plane spanned by the basis.
  double max_plane_distance_m = 0.0;
  bool planar = true;
  bool affine = true;
};

inline constexpr double kDefaultPlanarityTolerance = 0.05;

inline FaceDiagnostics diagnose_face(const TexturedFace& face,
                                     double planarity_tolerance_m = kDefaultPlanarityTolerance,
                                     double affine_tolerance_m = 1e-6) {
  const FaceBasis basis = build_face_basis(face);
  FaceDiagnostics d;
  const Vec3 normal = basis.w1.cross(basis.w2).normalized();
  for (std::size_t j = 0; j < face.st_ring.size(); ++j) {
    const WorldPoint mapped = st_to_world(face.st_ring[j], basis);
    d.max_vertex_residual_m = std::max(d.max_vertex_residual_m, (mapped - face.world_ring[j]).norm());
    d.max_plane_distance_m =
        std::max(d.max_plane_distance_m, std::abs(normal.dot(face.world_ring[j] - basis.origin_world)));
  }
  d.planar = d.max_plane_distance_m <= planarity_tolerance_m;
  d.affine = d.max_vertex_residual_m <= affine_tolerance_m;
  return d;
}

}  // namespace facadeloc
