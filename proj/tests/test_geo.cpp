#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "test_support.hpp"

using namespace facadeloc;
using testing_support::random_affine_face;
using testing_support::unit_square_face;

namespace {

// Affine st -> world map fitted by least squares over all ring vertices,
// in coordinates relative to vertex 0.
WorldPoint affine_fit_oracle(const TexturedFace& f, const StPoint& p) {
  const auto n = static_cast<Eigen::Index>(f.st_ring.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::MatrixXd b(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.row(i) << 1.0, f.st_ring[i].s, f.st_ring[i].t;
    b.row(i) = (f.world_ring[i] - f.world_ring[0]).transpose();
  }
  const Eigen::MatrixXd coef = a.colPivHouseholderQr().solve(b);
  const Eigen::RowVector3d local = Eigen::RowVector3d(1.0, p.s, p.t) * coef;
  return f.world_ring[0] + local.transpose();
}

}  // namespace

TEST(PixelToSt, Corners) {
  const double w = 640, h = 480;
  EXPECT_EQ(pixel_to_st({0, h}, w, h), (StPoint{0, 0}));
  EXPECT_EQ(pixel_to_st({w, 0}, w, h), (StPoint{1, 1}));
  EXPECT_EQ(pixel_to_st({w / 2, h / 2}, w, h), (StPoint{0.5, 0.5}));
}

TEST(PixelToSt, RejectsBadInput) {
  EXPECT_THROW(pixel_to_st({std::nan(""), 1}, 10, 10), ValidationError);
  EXPECT_THROW(pixel_to_st({1, kInf}, 10, 10), ValidationError);
  EXPECT_THROW(pixel_to_st({1, 1}, 0, 10), ValidationError);
}

TEST(PixelToSt, PixelCenterConvention) {
  const PixelPoint c = pixel_center(0, 0);
  EXPECT_EQ(c.u, 0.5);
  EXPECT_EQ(c.v, 0.5);
  const StPoint st = pixel_to_st(pixel_center(9, 9), 10, 10);
  EXPECT_DOUBLE_EQ(st.s, 0.95);
  EXPECT_NEAR(st.t, 0.05, 1e-16);  // 1 - 0.95 cancels
}

TEST(FaceBasis, UnitSquareHandComputed) {
  const FaceBasis b = build_face_basis(unit_square_face());
  EXPECT_EQ(b.b1, Vec2(1, 0));
  EXPECT_EQ(b.b2, Vec2(1, 1));
  EXPECT_EQ(b.w1, Vec3(10, 0, 0));
  EXPECT_EQ(b.w2, Vec3(10, 0, 5));
  EXPECT_EQ(b.vertices, (std::array<std::size_t, 3>{0, 1, 2}));
}

TEST(FaceBasis, SkipsCollinearTriple) {
  TexturedFace f;
  f.face_id = "collinear";
  f.st_ring = {{0, 0}, {0.5, 0}, {1, 0}, {1, 1}};
  f.world_ring = {{0, 0, 0}, {5, 0, 0}, {10, 0, 0}, {10, 0, 7}};
  const FaceBasis b = build_face_basis(f);
  EXPECT_EQ(b.vertices, (std::array<std::size_t, 3>{0, 1, 3}));
  EXPECT_EQ(b.b2, Vec2(1, 1));
  EXPECT_EQ(b.w2, Vec3(10, 0, 7));
}

TEST(FaceBasis, IdenticalStVerticesFail) {
  TexturedFace f;
  f.face_id = "flat_st";
  f.st_ring = {{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}};
  f.world_ring = {{0, 0, 0}, {1, 0, 0}, {0, 0, 1}};
  try {
    build_face_basis(f);
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_NE(std::string(e.what()).find("flat_st"), std::string::npos);
  }
}

TEST(StToWorld, OriginAndBasisVertices) {
  const TexturedFace f = unit_square_face();
  const FaceBasis b = build_face_basis(f);
  EXPECT_EQ(st_to_world(f.st_ring[0], b), f.world_ring[0]);
  EXPECT_LT((st_to_world(f.st_ring[1], b) - f.world_ring[1]).norm(), 1e-12);
}

TEST(StToWorld, SquareCenter) {
  // Hand solve: A^-1 (0.5, 0.5) = (0, 0.5), so origin + 0.5 * w2.
  const TexturedFace f = unit_square_face();
  const WorldPoint x = st_to_world({0.5, 0.5}, build_face_basis(f));
  EXPECT_LT((x - WorldPoint(105, 200, 12.5)).norm(), 1e-12);
  // independent plane parameterization: corner + s * along + t * up
  const WorldPoint oracle = WorldPoint(100, 200, 10) + 0.5 * Vec3(10, 0, 0) + 0.5 * Vec3(0, 0, 5);
  EXPECT_LT((x - oracle).norm(), 1e-12);
}

TEST(PixelToWorld, VertexIdentityAndPlane) {
  const TexturedFace f = unit_square_face();
  const PixelPoint p2 = st_to_pixel(f.st_ring[2], f.image_width, f.image_height);
  EXPECT_LT((pixel_to_world(p2, f) - f.world_ring[2]).norm(), 1e-9);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const WorldPoint x = pixel_to_world({rng.uniform(0, 200), rng.uniform(0, 100)}, f);
    EXPECT_LT(std::abs(x.y() - 200.0), 1e-9);
  }
}

TEST(PixelToWorld, MatchesLeastSquaresOracle) {
  Rng rng(11);
  for (int k = 0; k < 10; ++k) {
    const TexturedFace f = random_affine_face(rng, "face" + std::to_string(k));
    const FaceMapper mapper(f);
    for (int i = 0; i < 10; ++i) {
      const PixelPoint p{rng.uniform(0, f.image_width), rng.uniform(0, f.image_height)};
      const WorldPoint got = mapper(p);
      const WorldPoint want = affine_fit_oracle(f, pixel_to_st(p, f.image_width, f.image_height));
      EXPECT_LT((got - want).norm(), 1e-9);
      EXPECT_EQ(got, pixel_to_world(p, f));
    }
  }
}

TEST(PixelToWorld, AffineConsistencyAndAllVertices) {
  Rng rng(12);
  for (int k = 0; k < 50; ++k) {
    const TexturedFace f = random_affine_face(rng, "f");
    const FaceMapper m(f);
    for (std::size_t j = 0; j < f.st_ring.size(); ++j) {
      const PixelPoint p = st_to_pixel(f.st_ring[j], f.image_width, f.image_height);
      EXPECT_LT((m(p) - f.world_ring[j]).norm(), 1e-9);
    }
    const PixelPoint p{rng.uniform(0, f.image_width), rng.uniform(0, f.image_height)};
    const PixelPoint q{rng.uniform(0, f.image_width), rng.uniform(0, f.image_height)};
    const double lambda = rng.uniform();
    const PixelPoint mix{lambda * p.u + (1 - lambda) * q.u, lambda * p.v + (1 - lambda) * q.v};
    const WorldPoint& o = f.world_ring[0];
    EXPECT_LT((Vec3(m(mix) - o) - (lambda * Vec3(m(p) - o) + (1 - lambda) * Vec3(m(q) - o))).norm(), 1e-9);
  }
}

TEST(PixelToWorld, OutsideUnitRangeNotClamped) {
  const TexturedFace f = unit_square_face();
  const WorldPoint x = pixel_to_world({-100, 0}, f);  // s = -0.5, t = 1
  EXPECT_LT((x - WorldPoint(95, 200, 15)).norm(), 1e-12);
  EXPECT_FALSE(st_inside_polygon({-0.5, 1}, f));
  EXPECT_TRUE(st_inside_polygon({0.5, 0.5}, f));
}

TEST(PixelToWorld, RequiresResolvedImageSize) {
  TexturedFace f = unit_square_face();
  f.image_width = 0;
  EXPECT_THROW(FaceMapper{f}, ValidationError);
}

TEST(FaceDiagnostics, NonAffineAndNonPlanarFacesAreFlagged) {
  TexturedFace f = unit_square_face();
  EXPECT_TRUE(diagnose_face(f).planar);
  EXPECT_TRUE(diagnose_face(f).affine);
  f.world_ring[3] += Vec3(0, 0.2, 0);  // 20 cm out of plane
  const FaceDiagnostics d = diagnose_face(f, 0.05);
  EXPECT_FALSE(d.planar);
  EXPECT_FALSE(d.affine);
  EXPECT_NEAR(d.max_plane_distance_m, 0.2, 1e-12);
  // still usable: the affine map projects onto the basis plane
  EXPECT_NO_THROW(pixel_to_world({10, 10}, f));
}
