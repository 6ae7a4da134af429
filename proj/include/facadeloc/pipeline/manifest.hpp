#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facadeloc/camera/camera.hpp"
#include "facadeloc/core/errors.hpp"
#include "facadeloc/core/io.hpp"
#include "facadeloc/gml/textured_face.hpp"
#include "facadeloc/pipeline/config.hpp"

namespace facadeloc {

inline constexpr const char* kBuiltinMatcher = "builtin";

struct PairSpec {
  std::string pair_id;
  std::string gml_path;
  std::string face_id;
  std::string camera_path;   // CameraRecord JSON
  std::string image_path;    // camera image
  std::string match_source = kBuiltinMatcher;  // "builtin" or a matchset/1 file

  bool builtin() const { return match_source == kBuiltinMatcher; }
};

// Paths are stored as written; relative ones are resolved against base_dir
// (the directory of the manifest file).
struct PairManifest {
  std::vector<PairSpec> pairs;
  PipelineConfig defaults;
  std::filesystem::path base_dir = ".";

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

inline void validate_pair_ids(const PairManifest& m) {
  std::set<std::string> seen;
  for (const auto& p : m.pairs) {
    if (p.pair_id.empty()) throw ValidationError("manifest: empty pair_id");
    if (!seen.insert(p.pair_id).second) throw ValidationError("manifest: duplicate pair_id '" + p.pair_id + "'");
  }
}

inline nlohmann::json manifest_to_json(const PairManifest& m) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : m.pairs) {
    pairs.push_back({{"pair_id", p.pair_id},
                     {"gml", p.gml_path},
                     {"face_id", p.face_id},
                     {"camera", p.camera_path},
                     {"image", p.image_path},
                     {"matches", p.match_source}});
  }
  return {{"schema", "manifest/1"}, {"defaults", config_to_json(m.defaults)}, {"pairs", pairs}};
}

inline PairManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  PairManifest m;
  m.base_dir = base_dir;
  try {
    if (j.at("schema").get<std::string>() != "manifest/1") throw ValidationError("manifest: unsupported schema");
    if (j.contains("defaults")) apply_config_json(m.defaults, j.at("defaults"));
    for (const auto& e : j.at("pairs")) {
      PairSpec p;
      p.pair_id = e.at("pair_id").get<std::string>();
      p.gml_path = e.at("gml").get<std::string>();
      p.face_id = e.at("face_id").get<std::string>();
      p.camera_path = e.at("camera").get<std::string>();
      p.image_path = e.at("image").get<std::string>();
      p.match_source = e.value("matches", std::string(kBuiltinMatcher));
      m.pairs.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
  validate_pair_ids(m);
  return m;
}

inline PairManifest load_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

// ---- visibility -------------------------------------------------------------

// Area of the projected face inside the camera image, as a fraction of the
// image area. Zero when any vertex is not in front of the camera.
inline double overlap_fraction(const TexturedFace& face, const CameraRecord& cam) {
  const auto& k = cam.intrinsics;
  std::vector<Vec2> poly;
  for (const auto& x : face.world_ring) {
    auto p = try_project(x, cam.gt_pose, k);
    if (!p) return 0.0;
    poly.emplace_back(p->u, p->v);
  }
  // Sutherland-Hodgman against the four image edges.
  auto clip = [](const std::vector<Vec2>& in, auto inside, auto cross) {
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vec2& a = in[i];
      const Vec2& b = in[(i + 1) % in.size()];
      const bool ia = inside(a);
      const bool ib = inside(b);
      if (ia) out.push_back(a);
      if (ia != ib) out.push_back(cross(a, b));
    }
    return out;
  };
  const double w = k.width;
  const double h = k.height;
  for (int axis = 0; axis < 2; ++axis) {
    for (double bound : {0.0, axis == 0 ? w : h}) {
      const bool lower = bound == 0.0;
      poly = clip(
          poly, [&](const Vec2& p) { return lower ? p[axis] >= bound : p[axis] <= bound; },
          [&](const Vec2& a, const Vec2& b) {
            const double s = (bound - a[axis]) / (b[axis] - a[axis]);
            return Vec2(a + s * (b - a));
          });
      if (poly.empty()) return 0.0;
    }
  }
  double area = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(area) / 2.0 / (w * h);
}

struct CameraEntry {
  CameraRecord record;
  std::string path;  // where the CameraRecord JSON lives (as written into the manifest)
};

inline std::string sanitize_id(std::string s) {
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return s;
}

// One pair per (face, camera) with every vertex in front of the camera and
// enough of the projected face inside the image. A face may pair with several
// cameras. Camera image paths are taken relative to the camera JSON.
inline PairManifest build_pairs(const std::vector<TexturedFace>& faces, const std::string& gml_path,
                                const std::vector<CameraEntry>& cameras, const PipelineConfig& cfg = {}) {
  PairManifest m;
  m.defaults = cfg;
  std::map<std::string, int> used;
  for (const auto& f : faces) {
    for (const auto& c : cameras) {
      const double overlap = overlap_fraction(f, c.record);
      if (overlap == 0.0 || overlap < cfg.min_overlap) continue;
      PairSpec p;
      std::string id = sanitize_id(f.face_id + "__" + std::filesystem::path(c.record.image_path).stem().string());
      if (const int n = used[id]++; n > 0) id += "_" + std::to_string(n);
      p.pair_id = id;
      p.gml_path = gml_path;
      p.face_id = f.face_id;
      p.camera_path = c.path;
      const std::filesystem::path img(c.record.image_path);
      p.image_path = img.is_absolute() ? img.string()
                                       : (std::filesystem::path(c.path).parent_path() / img).lexically_normal().string();
      m.pairs.push_back(std::move(p));
    }
  }
  return m;
}

}  // namespace facadeloc
