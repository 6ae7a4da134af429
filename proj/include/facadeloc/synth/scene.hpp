#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "facadeloc/camera/camera.hpp"
#include "facadeloc/core/errors.hpp"
#include "facadeloc/core/rng.hpp"
#include "facadeloc/features/matchset.hpp"
#include "facadeloc/gml/citygml.hpp"
#include "facadeloc/image/image.hpp"
#include "facadeloc/robust/homography.hpp"

namespace facadeloc {

struct SceneConfig {
  std::uint64_t seed = 42;
  double facade_width_m = 20.0;
  double facade_height_m = 15.0;
  int texture_width = 640;
  int texture_height = 480;
  double standoff_m = 25.0;
  double yaw_deg = 0.0;    // camera orbit around the vertical axis through the facade center
  double pitch_deg = 0.0;  // camera elevation above the facade center
  double azimuth_deg = 30.0;  // bearing of the facade's horizontal edge, from East towards North
  WorldPoint origin{691000.0, 5336000.0, 510.0};  // lower-left facade corner
  int image_width = 800;
  int image_height = 600;
  double focal_px = 700.0;
  std::string face_id = "facade_0";
  std::string texture_name = "texture.png";
  std::string view_name = "view.png";
};

struct SynthScene {
  SceneConfig config;
  TexturedFace face;
  std::string gml_document;
  CameraRecord camera;
  Image texture;
  Image view_image;
  Homography plane_homography;  // texture pixels -> camera pixels
  std::uint64_t rng_seed = 0;
};

namespace synth_detail {

// Smoothly interpolated lattice noise in [-1, 1].
class ValueNoise {
 public:
  ValueNoise(Rng& rng, int width, int height, double cell)
      : cell_(cell), nx_(static_cast<int>(width / cell) + 3), ny_(static_cast<int>(height / cell) + 3) {
    lattice_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (auto& v : lattice_) v = rng.uniform(-1.0, 1.0);
  }

  double operator()(double x, double y) const {
    const double fx = x / cell_;
    const double fy = y / cell_;
    const int ix = static_cast<int>(std::floor(fx));
    const int iy = static_cast<int>(std::floor(fy));
    const double ax = smooth(fx - ix);
    const double ay = smooth(fy - iy);
    auto at = [&](int i, int j) {
      i = std::clamp(i, 0, nx_ - 1);
      j = std::clamp(j, 0, ny_ - 1);
      return lattice_[static_cast<std::size_t>(j) * nx_ + i];
    };
    return (1 - ay) * ((1 - ax) * at(ix, iy) + ax * at(ix + 1, iy)) + ay * ((1 - ax) * at(ix, iy + 1) + ax * at(ix + 1, iy + 1));
  }

 private:
  static double smooth(double t) { return t * t * (3 - 2 * t); }
  double cell_;
  int nx_, ny_;
  std::vector<double> lattice_;
};

// Facade-like procedural texture: low-contrast checker, band-limited noise and
// a scatter of flat "window" rectangles with their own shading.
inline Image make_texture(Rng& rng, int w, int h) {
  const ValueNoise coarse(rng, w, h, 48.0);
  const ValueNoise fine(rng, w, h, 12.0);
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool checker = ((x / 64) + (y / 64)) % 2 == 0;
      v[static_cast<std::size_t>(y) * w + x] =
          128.0 + (checker ? 12.0 : -12.0) + 45.0 * coarse(x, y) + 22.0 * fine(x, y);
    }
  }
  const int rects = std::max(20, w * h / 3000);
  for (int r = 0; r < rects; ++r) {
    const int rw = 8 + static_cast<int>(rng.below(48));
    const int rh = 8 + static_cast<int>(rng.below(48));
    const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, w - rw))));
    const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, h - rh))));
    const double base = rng.uniform(20.0, 235.0);
    const double gx = rng.uniform(-1.5, 1.5);
    const double gy = rng.uniform(-1.5, 1.5);
    for (int y = y0; y < std::min(h, y0 + rh); ++y) {
      for (int x = x0; x < std::min(w, x0 + rw); ++x) {
        v[static_cast<std::size_t>(y) * w + x] = base + gx * (x - x0) + gy * (y - y0) + 8.0 * fine(x + 500, y);
      }
    }
  }
  Image img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = saturate_u8(v[static_cast<std::size_t>(y) * w + x]);
  return img;
}

inline Mat3 look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(Vec3::UnitZ());
  if (x.norm() < 1e-9) throw ValidationError("synth: camera looks straight up or down");
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

}  // namespace synth_detail

// Builds a single textured facade, a pinhole camera looking at its center and
// the camera view rendered through the plane-induced homography.
inline SynthScene generate_scene(const SceneConfig& cfg) {
  using namespace synth_detail;
  if (cfg.texture_width < 64 || cfg.texture_height < 64 || cfg.image_width < 64 || cfg.image_height < 64) {
    throw ValidationError("synth: images must be at least 64x64");
  }
  if (!(cfg.facade_width_m > 0) || !(cfg.facade_height_m > 0) || !(cfg.standoff_m > 0) || !(cfg.focal_px > 0)) {
    throw ValidationError("synth: sizes, standoff and focal length must be positive");
  }
  SynthScene scene;
  scene.config = cfg;
  scene.rng_seed = cfg.seed;
  Rng rng(cfg.seed);

  const double az = cfg.azimuth_deg * std::numbers::pi / 180.0;
  const Vec3 along(std::cos(az), std::sin(az), 0.0);
  const Vec3 up = Vec3::UnitZ();
  const Vec3 outward(std::sin(az), -std::cos(az), 0.0);  // textured side, s to the viewer's right
  const WorldPoint v0 = cfg.origin;
  const WorldPoint v1 = v0 + cfg.facade_width_m * along;
  const WorldPoint v2 = v1 + cfg.facade_height_m * up;
  const WorldPoint v3 = v0 + cfg.facade_height_m * up;

  TexturedFace& face = scene.face;
  face.face_id = cfg.face_id;
  face.texture_path = cfg.texture_name;
  face.st_ring = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  face.world_ring = {v0, v1, v2, v3};
  face.image_width = cfg.texture_width;
  face.image_height = cfg.texture_height;
  scene.texture = make_texture(rng, cfg.texture_width, cfg.texture_height);
  scene.gml_document = write_citygml({face});

  const WorldPoint center = 0.25 * (v0 + v1 + v2 + v3);
  const double yaw = cfg.yaw_deg * std::numbers::pi / 180.0;
  const double pitch = cfg.pitch_deg * std::numbers::pi / 180.0;
  const Vec3 orbit = std::cos(yaw) * outward + std::sin(yaw) * along;
  const Vec3 eye = center + cfg.standoff_m * (std::cos(pitch) * orbit + std::sin(pitch) * up);
  if (!(outward.dot(eye - center) > 0)) throw ValidationError("synth: camera is behind the textured facade");

  CameraRecord& cam = scene.camera;
  cam.image_path = cfg.view_name;
  cam.intrinsics = {cfg.focal_px, cfg.focal_px, cfg.image_width / 2.0, cfg.image_height / 2.0, cfg.image_width,
                    cfg.image_height};
  cam.gt_pose = Pose::from_center(look_at(eye, center), eye);
  cam.tags = {"synthetic"};
  for (const auto& v : face.world_ring) {
    if (!(cam.gt_pose.transform(v).z() > 0)) throw ValidationError("synth: facade is behind the camera");
  }

  // texture (u, v) -> world: v3 + u * (v1 - v0) / W - v * (v3 - v0) / H
  const Vec3 m1 = (v1 - v0) / cfg.texture_width;
  const Vec3 m2 = -(v3 - v0) / cfg.texture_height;
  const Mat3& r = cam.gt_pose.R;
  Mat3 h;
  h.col(0) = r * m1;
  h.col(1) = r * m2;
  h.col(2) = r * (v3 - eye);  // == R * v3 + t without the large-coordinate cancellation
  scene.plane_homography = Homography::normalized(cam.intrinsics.matrix() * h);

  // Render with 2x2 supersampling; rays that miss the texture see a dim background.
  const Homography inv = scene.plane_homography.inverse();
  const ValueNoise background(rng, cfg.image_width, cfg.image_height, 24.0);
  const Mat3 kinv = cam.intrinsics.matrix().inverse();
  scene.view_image = Image(cfg.image_width, cfg.image_height, 1);
  for (int y = 0; y < cfg.image_height; ++y) {
    for (int x = 0; x < cfg.image_width; ++x) {
      double acc = 0;
      for (int sy = 0; sy < 2; ++sy) {
        for (int sx = 0; sx < 2; ++sx) {
          const Vec3 p(x + 0.25 + 0.5 * sx, y + 0.25 + 0.5 * sy, 1.0);
          const Vec3 ray = r.transpose() * (kinv * p);
          const double denom = outward.dot(ray);
          const double lambda = denom != 0 ? outward.dot(v0 - eye) / denom : -1.0;
          double value = 70.0 + 12.0 * background(p.x(), p.y());
          if (lambda > 0) {
            if (auto q = inv.apply({p.x(), p.y()}); q && q->x() >= 0 && q->y() >= 0 &&
                                                    q->x() < cfg.texture_width && q->y() < cfg.texture_height) {
              value = sample_bilinear(scene.texture, q->x() - 0.5, q->y() - 0.5);
            }
          }
          acc += value;
        }
      }
      scene.view_image.at(x, y) = saturate_u8(acc / 4.0);
    }
  }
  return scene;
}

// Exact correspondences: random texture points inside the face, projected with
// the ground-truth pose; points leaving the camera image are skipped.
inline MatchSet ground_truth_matches(const SynthScene& scene, std::size_t count, std::uint64_t seed,
                                     double margin_px = 2.0) {
  Rng rng(seed);
  MatchSet ms;
  ms.image0 = {scene.config.texture_name, scene.config.texture_width, scene.config.texture_height};
  ms.image1 = {scene.config.view_name, scene.config.image_width, scene.config.image_height};
  ms.matcher = "ground-truth";
  const auto& k = scene.camera.intrinsics;
  std::size_t attempts = 0;
  while (ms.matches.size() < count && attempts++ < 100 * count) {
    const double u = rng.uniform(margin_px, scene.config.texture_width - margin_px);
    const double v = rng.uniform(margin_px, scene.config.texture_height - margin_px);
    auto q = scene.plane_homography.apply({u, v});
    if (!q || q->x() < 0 || q->y() < 0 || q->x() >= k.width || q->y() >= k.height) continue;
    Keypoint a, b;
    a.x = u;
    a.y = v;
    b.x = q->x();
    b.y = q->y();
    ms.keypoints0.push_back(a);
    ms.keypoints1.push_back(b);
    ms.matches.push_back({ms.keypoints0.size() - 1, ms.keypoints1.size() - 1, 1.0});
  }
  return ms;
}

struct CorruptedMatches {
  MatchSet matches;
  std::vector<bool> corrupted;  // per match: camera keypoint replaced by a random pixel
};

// Replaces round(outlier_fraction * n) camera-image keypoints with uniform
// random in-bounds pixels and adds Gaussian noise to the others.
inline CorruptedMatches corrupt_matches(const MatchSet& ms, double outlier_fraction, double noise_sigma_px,
                                        std::uint64_t seed) {
  if (!(outlier_fraction >= 0 && outlier_fraction < 1)) {
    throw ValidationError("corrupt_matches: outlier_fraction must lie in [0, 1)");
  }
  if (!(noise_sigma_px >= 0)) throw ValidationError("corrupt_matches: noise sigma must be >= 0");
  CorruptedMatches out{ms, std::vector<bool>(ms.matches.size(), false)};
  const std::size_t n = ms.matches.size();
  const auto n_out = static_cast<std::size_t>(std::floor(outlier_fraction * static_cast<double>(n) + 0.5));
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < n_out; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
    out.corrupted[order[i]] = true;
  }
  const double w = ms.image1.width;
  const double h = ms.image1.height;
  for (std::size_t m = 0; m < n; ++m) {
    Keypoint& kp = out.matches.keypoints1[ms.matches[m].index1];
    if (out.corrupted[m]) {
      kp.x = rng.uniform(0.0, w);
      kp.y = rng.uniform(0.0, h);
    } else if (noise_sigma_px > 0) {
      kp.x = std::clamp(kp.x + rng.normal(0.0, noise_sigma_px), 0.0, std::nextafter(w, 0.0));
      kp.y = std::clamp(kp.y + rng.normal(0.0, noise_sigma_px), 0.0, std::nextafter(h, 0.0));
    }
  }
  return out;
}

}  // namespace facadeloc
