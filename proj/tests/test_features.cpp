#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"

using namespace facadeloc;

namespace {

Image checkerboard(int size, int cell) {
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) img.at(x, y) = ((x / cell + y / cell) % 2) ? 220 : 35;
  return img;
}

Image textured(std::uint64_t seed, int w, int h) {
  Rng rng(seed);
  return synth_detail::make_texture(rng, w, h);
}

// 90 degrees clockwise: pixel (x, y) -> (h - 1 - y, x).
Image rotate90(const Image& src) {
  Image out(src.height(), src.width());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) out.at(src.height() - 1 - y, x) = src.at(x, y);
  return out;
}

// Rotation by theta about the image center, bilinear.
Image rotate_about_center(const Image& src, double theta) {
  Image out(src.width(), src.height(), 1, 0);
  const double cx = src.width() / 2.0, cy = src.height() / 2.0;
  const double c = std::cos(theta), s = std::sin(theta);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double sx = c * dx + s * dy + cx, sy = -s * dx + c * dy + cy;
      out.at(x, y) = saturate_u8(sample_bilinear(src, sx - 0.5, sy - 0.5));
    }
  }
  return out;
}

BinaryDescriptor random_descriptor(Rng& rng) {
  BinaryDescriptor d;
  for (auto& w : d.bits) w = rng.next_u64();
  return d;
}

}  // namespace

TEST(Detect, UniformImageHasNoKeypoints) {
  EXPECT_TRUE(detect(Image(200, 200, 1, 128)).empty());
}

TEST(Detect, TinyImageIsEmptyNotError) {
  EXPECT_TRUE(detect(textured(1, 40, 40)).empty());
  EXPECT_THROW(detect(Image()), ValidationError);
  EXPECT_THROW(detect(Image(100, 100, 3)), ValidationError);
}

TEST(Detect, CheckerboardInteriorCorners) {
  const int cell = 32;
  const auto kps = detect(checkerboard(256, cell));
  int found = 0, total = 0;
  for (int cy = cell; cy < 256; cy += cell) {
    for (int cx = cell; cx < 256; cx += cell) {
      ++total;
      const bool hit = std::any_of(kps.begin(), kps.end(),
                                   [&](const Keypoint& k) { return std::hypot(k.x - cx, k.y - cy) <= 2.0; });
      found += hit;
      EXPECT_TRUE(hit) << "corner " << cx << "," << cy;
    }
  }
  EXPECT_EQ(found, total);
}

TEST(Detect, SortedCappedAndInBounds) {
  const Image img = textured(2, 640, 480);
  OrbOptions opt;
  opt.max_keypoints = 300;
  const auto kps = detect(img, opt);
  ASSERT_FALSE(kps.empty());
  EXPECT_LE(kps.size(), 300u);
  for (std::size_t i = 0; i < kps.size(); ++i) {
    EXPECT_GE(kps[i].x, 0);
    EXPECT_LT(kps[i].x, 640);
    EXPECT_GE(kps[i].y, 0);
    EXPECT_LT(kps[i].y, 480);
    EXPECT_GE(kps[i].scale_level, 0);
    if (i) EXPECT_GE(kps[i - 1].response, kps[i].response);
  }
}

TEST(Detect, RotationBy90) {
  const Image img = textured(3, 480, 480);
  const Image rot = rotate90(img);
  const auto a = detect(img);
  const auto b = detect(rot);
  ASSERT_GT(a.size(), 200u);
  EXPECT_NEAR(static_cast<double>(b.size()), static_cast<double>(a.size()), 0.1 * a.size());
  int mapped = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const double x = img.height() - a[i].y, y = a[i].x;
    mapped += std::any_of(b.begin(), b.end(), [&](const Keypoint& k) { return std::hypot(k.x - x, k.y - y) <= 2.0; });
  }
  EXPECT_GE(mapped, 160);
}

TEST(Describe, Deterministic) {
  const Image img = textured(4, 320, 240);
  const auto kps = detect(img);
  const auto a = describe(img, kps);
  const auto b = describe(img, kps);
  EXPECT_EQ(a.descriptors, b.descriptors);
  EXPECT_EQ(a.kept, b.kept);
}

TEST(Describe, BorderKeypointDroppedAndReported) {
  const Image img = textured(5, 200, 200);
  std::vector<Keypoint> kps{{100.5, 100.5, 1, 0, 0}, {5.5, 100.5, 1, 0, 0}, {100.5, 196.5, 1, 0.3, 0}};
  const auto r = describe(img, kps);
  EXPECT_EQ(r.kept, (std::vector<std::size_t>{0}));
  EXPECT_EQ(r.dropped, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(r.descriptors.size(), 1u);
}

TEST(Describe, SteeredRotationInvariance) {
  const Image img = textured(6, 480, 480);
  const double theta = std::numbers::pi / 4;
  const Image rot = rotate_about_center(img, theta);
  const double cx = 240, cy = 240;
  std::vector<Keypoint> k0, k1;
  for (const auto& k : detect(img)) {
    if (k.scale_level != 0 || std::hypot(k.x - cx, k.y - cy) > 150) continue;
    Keypoint m = k;
    const double dx = k.x - cx, dy = k.y - cy;
    m.x = cx + std::cos(theta) * dx - std::sin(theta) * dy;
    m.y = cy + std::sin(theta) * dx + std::cos(theta) * dy;
    m.angle = k.angle + theta;
    k0.push_back(k);
    k1.push_back(m);
  }
  ASSERT_GT(k0.size(), 30u);
  const auto d0 = describe(img, k0);
  const auto d1 = describe(rot, k1);
  ASSERT_EQ(d0.kept, d1.kept);
  std::vector<int> dist;
  for (std::size_t i = 0; i < d0.descriptors.size(); ++i) dist.push_back(hamming_distance(d0.descriptors[i], d1.descriptors[i]));
  std::nth_element(dist.begin(), dist.begin() + dist.size() / 2, dist.end());
  EXPECT_LT(dist[dist.size() / 2], 60);
}

TEST(Describe, PatternIsFixed) {
  const auto& p = descriptor_pattern();
  EXPECT_EQ(p.size(), 256u);
  for (const auto& q : p)
    for (int v : q) EXPECT_LE(std::abs(v), 15);
}

TEST(MatchNN, IdentityMatching) {
  Rng rng(7);
  std::vector<BinaryDescriptor> d;
  for (int i = 0; i < 50; ++i) d.push_back(random_descriptor(rng));
  const auto m = match_nn(d, d);
  ASSERT_EQ(m.size(), 50u);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m[i].index0, i);
    EXPECT_EQ(m[i].index1, i);
    EXPECT_EQ(m[i].score, 1.0);
  }
}

TEST(MatchNN, InvertedDescriptorUnmatched) {
  Rng rng(8);
  std::vector<BinaryDescriptor> d0;
  for (int i = 0; i < 20; ++i) d0.push_back(random_descriptor(rng));
  auto d1 = d0;
  for (auto& w : d1[7].bits) w = ~w;
  const auto m = match_nn(d0, d1);
  EXPECT_EQ(m.size(), 19u);
  for (const auto& x : m) EXPECT_NE(x.index0, 7u);
}

TEST(MatchNN, EmptyInputs) {
  Rng rng(9);
  std::vector<BinaryDescriptor> d{random_descriptor(rng)};
  EXPECT_TRUE(match_nn({}, d).empty());
  EXPECT_TRUE(match_nn(d, {}).empty());
}

TEST(MatchNN, ExhaustiveOracleAndSymmetry) {
  Rng rng(10);
  std::vector<BinaryDescriptor> d0, d1;
  // small bit budget so ties and near neighbours actually occur
  for (int i = 0; i < 100; ++i) {
    BinaryDescriptor a, b;
    a.bits[0] = rng.next_u64() & 0xFFFF;
    b.bits[0] = rng.next_u64() & 0xFFFF;
    d0.push_back(a);
    d1.push_back(b);
  }
  for (bool cross : {true, false}) {
    MatchOptions opt{cross, 64};
    std::vector<Match> oracle;
    for (std::size_t i = 0; i < d0.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < d1.size(); ++j)
        if (hamming_distance(d0[i], d1[j]) < hamming_distance(d0[i], d1[best])) best = j;
      std::size_t back = 0;
      for (std::size_t k = 1; k < d0.size(); ++k)
        if (hamming_distance(d0[k], d1[best]) < hamming_distance(d0[back], d1[best])) back = k;
      if (cross && back != i) continue;
      const int dist = hamming_distance(d0[i], d1[best]);
      if (dist > 64) continue;
      oracle.push_back({i, best, 1.0 - dist / 256.0});
    }
    EXPECT_EQ(match_nn(d0, d1, opt), oracle);
  }
  const auto fwd = match_nn(d0, d1);
  auto rev = match_nn(d1, d0);
  for (auto& m : rev) std::swap(m.index0, m.index1);
  std::sort(rev.begin(), rev.end(), [](const Match& a, const Match& b) { return a.index0 < b.index0; });
  EXPECT_EQ(fwd, rev);
  std::set<std::size_t> s0, s1;
  for (const auto& m : fwd) {
    EXPECT_TRUE(s0.insert(m.index0).second);
    EXPECT_TRUE(s1.insert(m.index1).second);
    EXPECT_GE(m.score, 0.0);
    EXPECT_LE(m.score, 1.0);
  }
}

namespace {

nlohmann::json minimal_matchset() {
  return nlohmann::json::parse(R"({"schema":"matchset/1",
    "image0":{"path":"a.png","width":10,"height":10},
    "image1":{"path":"b.png","width":20,"height":20},
    "keypoints0":[[1.5,2.5]],"keypoints1":[[3,4]],
    "matches":[[0,0,0.9]],
    "meta":{"matcher":"test","resize_long_edge":null}})");
}

std::string load_error(const nlohmann::json& j) {
  try {
    load_matchset(j.dump());
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(LoadMatchset, MinimalValid) {
  const MatchSet ms = load_matchset(minimal_matchset().dump());
  EXPECT_EQ(ms.keypoints0.size(), 1u);
  EXPECT_EQ(ms.keypoints1.size(), 1u);
  EXPECT_EQ(ms.matches.size(), 1u);
  EXPECT_EQ(ms.keypoints0[0].x, 1.5);
  EXPECT_FALSE(ms.resize_long_edge.has_value());
}

TEST(LoadMatchset, IndexOutOfRange) {
  auto j = minimal_matchset();
  j["keypoints1"] = {{1, 1}, {2, 2}, {3, 3}};
  j["matches"] = {{0, 5, 0.5}};
  EXPECT_NE(load_error(j).find("index out of range"), std::string::npos);
}

TEST(LoadMatchset, FieldLevelErrors) {
  auto j = minimal_matchset();
  j["schema"] = "matchset/2";
  EXPECT_NE(load_error(j).find("schema"), std::string::npos);
  j = minimal_matchset();
  j["keypoints0"] = {{11, 1}};
  EXPECT_NE(load_error(j).find("keypoints0[0]"), std::string::npos);
  j = minimal_matchset();
  j["meta"].erase("matcher");
  EXPECT_NE(load_error(j).find("meta.matcher"), std::string::npos);
  j = minimal_matchset();
  j["keypoints1"] = {{1, 1}, {2, 2}};
  j["matches"] = {{0, 0, 0.5}, {0, 1, 0.5}};
  EXPECT_NE(load_error(j).find("matches[1][0]"), std::string::npos);
  j = minimal_matchset();
  j["image1"].erase("width");
  EXPECT_NE(load_error(j).find("image1.width"), std::string::npos);
  EXPECT_NE(std::string(load_error(nlohmann::json::array())).find("matchset"), std::string::npos);
  EXPECT_THROW(load_matchset("{not json"), ValidationError);
}

TEST(LoadMatchset, RoundTripPreservesMeta) {
  auto j = minimal_matchset();
  j["meta"]["resize_long_edge"] = 1024;
  j["meta"]["device"] = "cpu";
  const MatchSet ms = load_matchset(j.dump());
  EXPECT_EQ(ms.resize_long_edge, 1024);
  const auto back = matchset_to_json(ms);
  EXPECT_EQ(back, j);
}

TEST(LoadMatchset, BridgeSampleFixture) {
  const MatchSet ms = load_matchset(read_file(testing_support::fixture("bridge_sample.matchset.json")));
  EXPECT_EQ(ms.keypoints0.size(), ms.meta_extra["num_keypoints0"].get<std::size_t>());
  EXPECT_EQ(ms.keypoints1.size(), ms.meta_extra["num_keypoints1"].get<std::size_t>());
  EXPECT_EQ(ms.resize_long_edge, 1024);
  EXPECT_FALSE(ms.matches.empty());
}
