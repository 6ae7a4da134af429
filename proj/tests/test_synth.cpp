#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace facadeloc;

namespace {

std::vector<std::uint8_t> bytes(const Image& img) {
  const auto d = img.data();
  return {d.begin(), d.end()};
}

SceneConfig small_config() {
  SceneConfig c;
  c.texture_width = 320;
  c.texture_height = 240;
  c.image_width = 400;
  c.image_height = 300;
  c.focal_px = 350;
  return c;
}

}  // namespace

TEST(GenerateScene, DeterministicGivenSeed) {
  const SynthScene a = generate_scene(SceneConfig{});
  const SynthScene b = generate_scene(SceneConfig{});
  EXPECT_EQ(bytes(a.texture), bytes(b.texture));
  EXPECT_EQ(bytes(a.view_image), bytes(b.view_image));
  EXPECT_EQ(a.gml_document, b.gml_document);
  EXPECT_EQ(a.plane_homography.H, b.plane_homography.H);
  SceneConfig other;
  other.seed = 43;
  EXPECT_NE(bytes(generate_scene(other).texture), bytes(a.texture));
}

TEST(GenerateScene, FrontalHomographyIsSimilarity) {
  const Mat3 h = generate_scene(SceneConfig{}).plane_homography.H;
  EXPECT_LT(std::abs(h(2, 0)), 1e-9);
  EXPECT_LT(std::abs(h(2, 1)), 1e-9);
  EXPECT_NEAR(h(0, 0), h(1, 1), 1e-9 * std::abs(h(0, 0)));
  EXPECT_NEAR(h(0, 1), -h(1, 0), 1e-9 * std::abs(h(0, 0)));
  EXPECT_GT(h(0, 0), 0);
}

TEST(GenerateScene, ConsistencyEquationAtRandomPixels) {
  Rng rng(60);
  for (double yaw : {0.0, 30.0, -50.0}) {
    SceneConfig cfg;
    cfg.yaw_deg = yaw;
    cfg.pitch_deg = yaw == 0 ? 0 : 12;
    const SynthScene s = generate_scene(cfg);
    const FaceMapper mapper(s.face);
    for (int i = 0; i < 1000; ++i) {
      const PixelPoint p{rng.uniform(0, cfg.texture_width), rng.uniform(0, cfg.texture_height)};
      const PixelPoint a = project(mapper(p), s.camera.gt_pose, s.camera.intrinsics);
      const Vec2 b = *s.plane_homography.apply({p.u, p.v});
      ASSERT_LT(std::hypot(a.u - b.x(), a.v - b.y()), 1e-6) << "yaw " << yaw;
    }
  }
}

TEST(GenerateScene, FacadeBehindCameraThrows) {
  SceneConfig cfg;
  cfg.yaw_deg = 120;
  EXPECT_THROW(generate_scene(cfg), ValidationError);
}

TEST(GenerateScene, GmlRoundTrip) {
  SceneConfig cfg;
  cfg.yaw_deg = 20;
  const SynthScene s = generate_scene(cfg);
  auto parsed = parse_citygml(s.gml_document);
  ASSERT_EQ(parsed.faces.size(), 1u);
  TexturedFace f = parsed.faces[0];
  EXPECT_EQ(f.face_id, s.face.face_id);
  EXPECT_EQ(f.texture_path, s.face.texture_path);
  ASSERT_EQ(f.world_ring.size(), s.face.world_ring.size());
  for (std::size_t i = 0; i < f.world_ring.size(); ++i) {
    EXPECT_EQ(f.world_ring[i], s.face.world_ring[i]);
    EXPECT_EQ(f.st_ring[i], s.face.st_ring[i]);
  }
  f.image_width = s.texture.width();
  f.image_height = s.texture.height();
  const FaceMapper a(f), b(s.face);
  Rng rng(61);
  for (int i = 0; i < 200; ++i) {
    const PixelPoint p{rng.uniform(0, 640), rng.uniform(0, 480)};
    EXPECT_LT((a(p) - b(p)).norm(), 1e-9);
  }
}

TEST(GenerateScene, TextureYieldsEnoughKeypoints) {
  const SynthScene s = generate_scene(SceneConfig{});
  EXPECT_GE(detect(s.texture).size(), 200u);
  EXPECT_GE(detect(s.view_image).size(), 200u);
}

// Detector repeatability under the warp: texture keypoints mapped through the
// homography that land inside the view, with a view keypoint within 3 px.
TEST(GenerateScene, RepeatabilityAtThirtyDegrees) {
  for (double yaw : {-30.0, 30.0}) {
    SceneConfig cfg;
    cfg.yaw_deg = yaw;
    const SynthScene s = generate_scene(cfg);
    OrbOptions opt;
    opt.max_keypoints = 1000;
    const auto k0 = detect(s.texture, opt);
    const auto k1 = detect(s.view_image, opt);
    int visible = 0, repeated = 0;
    for (const auto& k : k0) {
      auto q = s.plane_homography.apply({k.x, k.y});
      if (!q || q->x() < 20 || q->y() < 20 || q->x() >= cfg.image_width - 20 || q->y() >= cfg.image_height - 20) continue;
      ++visible;
      repeated += std::any_of(k1.begin(), k1.end(),
                              [&](const Keypoint& m) { return std::hypot(m.x - q->x(), m.y - q->y()) <= 3.0; });
    }
    ASSERT_GT(visible, 100);
    EXPECT_GT(static_cast<double>(repeated) / visible, 0.5) << "yaw " << yaw;
  }
}

TEST(GroundTruthMatches, ExactAndInBounds) {
  const SynthScene s = generate_scene(small_config());
  const MatchSet ms = ground_truth_matches(s, 150, 3);
  EXPECT_EQ(ms.matches.size(), 150u);
  EXPECT_NO_THROW(validate_matchset(ms));
  EXPECT_NO_THROW(load_matchset(matchset_to_json(ms).dump()));
  EXPECT_EQ(ms.matcher, "ground-truth");
}

TEST(CorruptMatches, ZeroIsIdentity) {
  const SynthScene s = generate_scene(small_config());
  const MatchSet ms = ground_truth_matches(s, 50, 3);
  const auto c = corrupt_matches(ms, 0, 0, 9);
  EXPECT_EQ(matchset_to_json(c.matches), matchset_to_json(ms));
  EXPECT_EQ(std::count(c.corrupted.begin(), c.corrupted.end(), true), 0);
}

TEST(CorruptMatches, ExactCountAndSeeded) {
  const SynthScene s = generate_scene(small_config());
  const MatchSet ms = ground_truth_matches(s, 100, 3);
  const auto a = corrupt_matches(ms, 0.5, 1, 9);
  EXPECT_EQ(std::count(a.corrupted.begin(), a.corrupted.end(), true), 50);
  const auto b = corrupt_matches(ms, 0.5, 1, 9);
  EXPECT_EQ(a.corrupted, b.corrupted);
  EXPECT_EQ(matchset_to_json(a.matches), matchset_to_json(b.matches));
  EXPECT_NE(corrupt_matches(ms, 0.5, 1, 10).corrupted, a.corrupted);
  EXPECT_NO_THROW(validate_matchset(a.matches));
  const auto third = corrupt_matches(ms, 0.33, 0, 9).corrupted;
  EXPECT_EQ(std::count(third.begin(), third.end(), true), 33);
  EXPECT_THROW(corrupt_matches(ms, 1.0, 0, 9), ValidationError);
  EXPECT_THROW(corrupt_matches(ms, 0.1, -1, 9), ValidationError);
}

TEST(CorruptMatches, RansacAgreesWithBookkeeping) {
  const SynthScene s = generate_scene(SceneConfig{});
  const MatchSet gt = ground_truth_matches(s, 400, 3);
  const auto c = corrupt_matches(gt, 0.5, 1.0, 4);
  const FaceMapper mapper(s.face);
  std::vector<WorldPoint> world;
  std::vector<PixelPoint> pix;
  for (const auto& m : c.matches.matches) {
    const auto& a = c.matches.keypoints0[m.index0];
    const auto& b = c.matches.keypoints1[m.index1];
    world.push_back(mapper({a.x, a.y}));
    pix.push_back({b.x, b.y});
  }
  const auto centered = center_points(world);
  const auto est = pnp_ransac(centered.points, pix, s.camera.intrinsics, RansacConfig{});
  ASSERT_TRUE(est.success);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < c.corrupted.size(); ++i) agree += est.inlier_mask[i] == !c.corrupted[i];
  EXPECT_GE(static_cast<double>(agree) / c.corrupted.size(), 0.95);
}
