#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "facadeloc/features/keypoint.hpp"
#include "facadeloc/image/image.hpp"

namespace facadeloc {

struct OrbOptions {
  int max_keypoints = 2048;
  int levels = 8;
  double scale_factor = 1.2;
  int fast_threshold = 20;
  // Keypoints keep this distance (level pixels) from the border so that the
  // rotated descriptor pattern and the orientation patch stay inside.
  int edge_threshold = 31;
  int patch_radius = 15;
  int harris_block = 7;
  double harris_k = 0.04;
  // Also accept X-junctions (checkerboard corners), which the contiguous-arc
  // segment test cannot see.
  bool saddle_corners = true;
};

struct PyramidLevel {
  Image image;
  double scale_x = 1.0;  // original pixels per level pixel
  double scale_y = 1.0;
};

// Each level is resized from the previous one.
inline std::vector<PyramidLevel> build_pyramid(const Image& gray, const OrbOptions& opt) {
  std::vector<PyramidLevel> levels;
  levels.push_back({gray, 1.0, 1.0});
  const int min_side = 2 * opt.edge_threshold + 1;
  for (int l = 1; l < opt.levels; ++l) {
    const Image& prev = levels.back().image;
    const int w = static_cast<int>(std::lround(prev.width() / opt.scale_factor));
    const int h = static_cast<int>(std::lround(prev.height() / opt.scale_factor));
    if (w < min_side || h < min_side) break;
    Image next = resize_bilinear(prev, w, h);
    levels.push_back({std::move(next), static_cast<double>(gray.width()) / w,
                      static_cast<double>(gray.height()) / h});
  }
  return levels;
}

namespace orb_detail {

// Bresenham circle of radius 3, clockwise from 12 o'clock.
inline constexpr std::array<std::array<int, 2>, 16> kCircle{{{0, -3},
                                                              {1, -3},
                                                              {2, -2},
                                                              {3, -1},
                                                              {3, 0},
                                                              {3, 1},
                                                              {2, 2},
                                                              {1, 3},
                                                              {0, 3},
                                                              {-1, 3},
                                                              {-2, 2},
                                                              {-3, 1},
                                                              {-3, 0},
                                                              {-3, -1},
                                                              {-2, -2},
                                                              {-1, -3}}};

// Longest circular run of `sign` in labels.
inline int longest_run(const std::array<int, 16>& labels, int sign) {
  int best = 0;
  int run = 0;
  for (int i = 0; i < 32; ++i) {
    if (labels[i % 16] == sign) {
      best = std::max(best, std::min(++run, 16));
    } else {
      run = 0;
    }
  }
  return best;
}

// Four alternating bright/dark arcs around the circle mean.
inline bool is_saddle(const std::array<int, 16>& values, int threshold) {
  int sum = 0;
  for (int v : values) sum += v;
  const double mean = sum / 16.0;
  std::array<int, 16> labels{};
  int labelled = 0;
  for (int i = 0; i < 16; ++i) {
    labels[i] = values[i] > mean + threshold ? 1 : (values[i] < mean - threshold ? -1 : 0);
    labelled += labels[i] != 0;
  }
  if (labelled < 12) return false;
  int start = 0;
  while (start < 16 && labels[start] == labels[(start + 15) % 16]) ++start;
  if (start == 16) return false;
  std::vector<std::pair<int, int>> runs;  // (sign, length)
  for (int k = 0; k < 16; ++k) {
    const int lab = labels[(start + k) % 16];
    if (!runs.empty() && runs.back().first == lab) {
      ++runs.back().second;
    } else {
      runs.push_back({lab, 1});
    }
  }
  std::vector<std::pair<int, int>> signed_runs;
  for (auto r : runs) {
    if (r.first != 0) signed_runs.push_back(r);
  }
  if (signed_runs.size() != 4) return false;
  for (std::size_t i = 0; i < 4; ++i) {
    if (signed_runs[i].second < 2) return false;
    if (signed_runs[i].first == signed_runs[(i + 1) % 4].first) return false;
  }
  return true;
}

inline bool segment_test(const Image& img, int x, int y, const OrbOptions& opt) {
  const int c = img.at(x, y);
  std::array<int, 16> values{};
  std::array<int, 16> labels{};
  for (int i = 0; i < 16; ++i) {
    values[i] = img.at(x + kCircle[i][0], y + kCircle[i][1]);
    labels[i] = values[i] > c + opt.fast_threshold ? 1 : (values[i] < c - opt.fast_threshold ? -1 : 0);
  }
  if (longest_run(labels, 1) >= 9 || longest_run(labels, -1) >= 9) return true;
  return opt.saddle_corners && is_saddle(values, opt.fast_threshold);
}

// Sobel gradients, border pixels left at zero.
inline void sobel(const Image& img, std::vector<float>& gx, std::vector<float>& gy) {
  const int w = img.width();
  const int h = img.height();
  gx.assign(static_cast<std::size_t>(w) * h, 0.f);
  gy.assign(static_cast<std::size_t>(w) * h, 0.f);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const int dx = (img.at(x + 1, y - 1) + 2 * img.at(x + 1, y) + img.at(x + 1, y + 1)) -
                     (img.at(x - 1, y - 1) + 2 * img.at(x - 1, y) + img.at(x - 1, y + 1));
      const int dy = (img.at(x - 1, y + 1) + 2 * img.at(x, y + 1) + img.at(x + 1, y + 1)) -
                     (img.at(x - 1, y - 1) + 2 * img.at(x, y - 1) + img.at(x + 1, y - 1));
      gx[static_cast<std::size_t>(y) * w + x] = static_cast<float>(dx) / 8.f;
      gy[static_cast<std::size_t>(y) * w + x] = static_cast<float>(dy) / 8.f;
    }
  }
}

inline double harris_response(const std::vector<float>& gx, const std::vector<float>& gy, int w, int x, int y,
                              const OrbOptions& opt) {
  const int r = opt.harris_block / 2;
  double a = 0, b = 0, c = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const std::size_t i = static_cast<std::size_t>(y + dy) * w + (x + dx);
      a += static_cast<double>(gx[i]) * gx[i];
      b += static_cast<double>(gy[i]) * gy[i];
      c += static_cast<double>(gx[i]) * gy[i];
    }
  }
  return a * b - c * c - opt.harris_k * (a + b) * (a + b);
}

}  // namespace orb_detail

// Intensity-centroid orientation over a disc of the given radius, in radians.
inline double intensity_centroid_angle(const Image& img, int x, int y, int radius) {
  double m10 = 0, m01 = 0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy > radius * radius) continue;
      const double v = img.clamped(x + dx, y + dy);
      m10 += dx * v;
      m01 += dy * v;
    }
  }
  return std::atan2(m01, m10);
}

// Splits the keypoint budget over levels, proportional to level area.
inline std::vector<int> features_per_level(int total, int levels, double factor) {
  std::vector<int> out(static_cast<std::size_t>(levels), 0);
  const double inv = 1.0 / factor;
  double n = total * (1 - inv) / (1 - std::pow(inv, levels));
  int sum = 0;
  for (int l = 0; l + 1 < levels; ++l) {
    out[l] = static_cast<int>(std::lround(n));
    sum += out[l];
    n *= inv;
  }
  out[levels - 1] = std::max(total - sum, 0);
  return out;
}

// Oriented corner detection over an image pyramid: segment-test candidates,
// Harris ranking with 3x3 non-maximum suppression, intensity-centroid
// orientation. Output is sorted by response, strongest first.
inline std::vector<Keypoint> detect(const Image& gray, const OrbOptions& opt = {}) {
  using namespace orb_detail;
  if (gray.empty()) throw ValidationError("detect: empty image");
  if (gray.channels() != 1) throw ValidationError("detect: expected a single-channel image");
  if (gray.width() < 2 * opt.edge_threshold + 1 || gray.height() < 2 * opt.edge_threshold + 1) return {};

  const auto pyramid = build_pyramid(gray, opt);
  const auto budget = features_per_level(opt.max_keypoints, static_cast<int>(pyramid.size()), opt.scale_factor);
  std::vector<Keypoint> all;
  for (std::size_t l = 0; l < pyramid.size(); ++l) {
    const Image& img = pyramid[l].image;
    const int w = img.width();
    const int h = img.height();
    const int border = opt.edge_threshold;
    std::vector<float> gx, gy;
    sobel(img, gx, gy);
    std::vector<double> score(static_cast<std::size_t>(w) * h, -std::numeric_limits<double>::infinity());
    std::vector<std::pair<int, int>> candidates;
    for (int y = border; y < h - border; ++y) {
      for (int x = border; x < w - border; ++x) {
        if (!segment_test(img, x, y, opt)) continue;
        const double r = harris_response(gx, gy, w, x, y, opt);
        if (!(r > 0)) continue;
        score[static_cast<std::size_t>(y) * w + x] = r;
        candidates.emplace_back(x, y);
      }
    }
    std::vector<Keypoint> level_kps;
    for (auto [x, y] : candidates) {
      const double r = score[static_cast<std::size_t>(y) * w + x];
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1 && keep; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double n = score[static_cast<std::size_t>(y + dy) * w + (x + dx)];
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (n > r || (n == r && earlier)) keep = false;
        }
      }
      if (!keep) continue;
      Keypoint kp;
      kp.x = (x + 0.5) * pyramid[l].scale_x;
      kp.y = (y + 0.5) * pyramid[l].scale_y;
      kp.response = r;
      kp.scale_level = static_cast<int>(l);
      kp.angle = intensity_centroid_angle(img, x, y, opt.patch_radius);
      level_kps.push_back(kp);
    }
    auto by_response = [](const Keypoint& a, const Keypoint& b) {
      if (a.response != b.response) return a.response > b.response;
      if (a.y != b.y) return a.y < b.y;
      return a.x < b.x;
    };
    std::sort(level_kps.begin(), level_kps.end(), by_response);
    if (level_kps.size() > static_cast<std::size_t>(budget[l])) level_kps.resize(static_cast<std::size_t>(budget[l]));
    all.insert(all.end(), level_kps.begin(), level_kps.end());
  }
  std::stable_sort(all.begin(), all.end(), [](const Keypoint& a, const Keypoint& b) {
    return a.response > b.response;
  });
  if (all.size() > static_cast<std::size_t>(opt.max_keypoints)) all.resize(static_cast<std::size_t>(opt.max_keypoints));
  return all;
}

// Recomputes the orientation of each keypoint on its pyramid level.
inline void compute_orientations(const Image& gray, std::vector<Keypoint>& kps, const OrbOptions& opt = {}) {
  const auto pyramid = build_pyramid(gray, opt);
  for (auto& kp : kps) {
    const auto l = static_cast<std::size_t>(std::clamp(kp.scale_level, 0, static_cast<int>(pyramid.size()) - 1));
    const int x = static_cast<int>(std::lround(kp.x / pyramid[l].scale_x - 0.5));
    const int y = static_cast<int>(std::lround(kp.y / pyramid[l].scale_y - 0.5));
    kp.angle = intensity_centroid_angle(pyramid[l].image, x, y, opt.patch_radius);
  }
}

namespace orb_detail {

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Approximately Gaussian integer offset, sigma ~ 31/5 px (sum of 4 uniforms).
constexpr int gaussian_offset(std::uint64_t& state) {
  double s = 0;
  for (int i = 0; i < 4; ++i) s += static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
  const double v = (s - 2.0) * 10.74;
  return static_cast<int>(v >= 0 ? v + 0.5 : v - 0.5);
}

inline constexpr int kPatternRadius = 13;

using Pattern = std::array<std::array<std::int8_t, 4>, 256>;

constexpr Pattern make_pattern(std::uint64_t seed) {
  Pattern p{};
  std::uint64_t state = seed;
  for (auto& pair : p) {
    for (;;) {
      int v[4] = {};
      bool ok = true;
      for (int k = 0; k < 4; k += 2) {
        do {
          v[k] = gaussian_offset(state);
          v[k + 1] = gaussian_offset(state);
        } while (v[k] * v[k] + v[k + 1] * v[k + 1] > kPatternRadius * kPatternRadius);
      }
      if (v[0] == v[2] && v[1] == v[3]) ok = false;
      if (ok) {
        for (int k = 0; k < 4; ++k) pair[k] = static_cast<std::int8_t>(v[k]);
        break;
      }
    }
  }
  return p;
}

// Committed sampling pattern: pairs (x1, y1, x2, y2) relative to the keypoint.
inline constexpr Pattern kPattern = make_pattern(0x0F1A5CADE5EEDULL);

}  // namespace orb_detail

inline const orb_detail::Pattern& descriptor_pattern() { return orb_detail::kPattern; }

struct DescribeResult {
  std::vector<BinaryDescriptor> descriptors;
  std::vector<std::size_t> kept;     // input indices, aligned with descriptors
  std::vector<std::size_t> dropped;  // input indices too close to the border
};

// Steered binary descriptors: the committed pair pattern is rotated by each
// keypoint's angle and sampled on the Gaussian-smoothed pyramid level.
inline DescribeResult describe(const Image& gray, const std::vector<Keypoint>& kps, const OrbOptions& opt = {}) {
  if (gray.channels() != 1) throw ValidationError("describe: expected a single-channel image");
  DescribeResult out;
  if (kps.empty()) return out;
  auto pyramid = build_pyramid(gray, opt);
  std::vector<Image> smoothed;
  smoothed.reserve(pyramid.size());
  for (const auto& lvl : pyramid) smoothed.push_back(gaussian_blur(lvl.image, 2.0, 7));
  const auto& pattern = descriptor_pattern();
  for (std::size_t i = 0; i < kps.size(); ++i) {
    const auto& kp = kps[i];
    if (kp.scale_level < 0 || kp.scale_level >= static_cast<int>(pyramid.size())) {
      out.dropped.push_back(i);
      continue;
    }
    const auto& lvl = pyramid[static_cast<std::size_t>(kp.scale_level)];
    const Image& img = smoothed[static_cast<std::size_t>(kp.scale_level)];
    const int x = static_cast<int>(std::lround(kp.x / lvl.scale_x - 0.5));
    const int y = static_cast<int>(std::lround(kp.y / lvl.scale_y - 0.5));
    const int b = opt.edge_threshold;
    if (x < b || y < b || x >= img.width() - b || y >= img.height() - b) {
      out.dropped.push_back(i);
      continue;
    }
    const double c = std::cos(kp.angle);
    const double s = std::sin(kp.angle);
    auto sample = [&](int px, int py) {
      const int rx = static_cast<int>(std::lround(c * px - s * py));
      const int ry = static_cast<int>(std::lround(s * px + c * py));
      return img.at(x + rx, y + ry);
    };
    BinaryDescriptor d;
    for (int k = 0; k < 256; ++k) {
      const auto& p = pattern[static_cast<std::size_t>(k)];
      if (sample(p[0], p[1]) < sample(p[2], p[3])) d.set(k);
    }
    out.descriptors.push_back(d);
    out.kept.push_back(i);
  }
  return out;
}

}  // namespace facadeloc
