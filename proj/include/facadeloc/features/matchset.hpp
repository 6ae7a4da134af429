#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "facadeloc/core/errors.hpp"
#include "facadeloc/features/keypoint.hpp"

namespace facadeloc {

struct Match {
  std::size_t index0 = 0;
  std::size_t index1 = 0;
  double score = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct ImageRef {
  std::string path;
  int width = 0;
  int height = 0;
};

// Keypoints of both images plus index-pair matches. By convention image0 is
// the facade texture and image1 the camera image.
struct MatchSet {
  ImageRef image0;
  ImageRef image1;
  std::vector<Keypoint> keypoints0;
  std::vector<Keypoint> keypoints1;
  std::vector<Match> matches;
  std::string matcher;
  std::optional<int> resize_long_edge;
  nlohmann::json meta_extra = nlohmann::json::object();  // meta fields beyond matcher / resize
};

struct MatchOptions {
  bool cross_check = true;
  int max_distance = 64;  // bits
};

// Brute-force Hamming nearest neighbours. Ties go to the smallest index. With
// cross_check only mutual nearest neighbours survive.
inline std::vector<Match> match_nn(const std::vector<BinaryDescriptor>& d0, const std::vector<BinaryDescriptor>& d1,
                                   const MatchOptions& opt = {}) {
  std::vector<Match> out;
  if (d0.empty() || d1.empty()) return out;
  std::vector<std::size_t> nn01(d0.size());
  std::vector<int> dist01(d0.size(), 257);
  std::vector<std::size_t> nn10(d1.size());
  std::vector<int> dist10(d1.size(), 257);
  for (std::size_t i = 0; i < d0.size(); ++i) {
    for (std::size_t j = 0; j < d1.size(); ++j) {
      const int d = hamming_distance(d0[i], d1[j]);
      if (d < dist01[i]) {
        dist01[i] = d;
        nn01[i] = j;
      }
      if (d < dist10[j]) {
        dist10[j] = d;
        nn10[j] = i;
      }
    }
  }
  for (std::size_t i = 0; i < d0.size(); ++i) {
    const std::size_t j = nn01[i];
    if (opt.cross_check && nn10[j] != i) continue;
    if (dist01[i] > opt.max_distance) continue;
    out.push_back({i, j, 1.0 - dist01[i] / 256.0});
  }
  return out;
}

// Checks the MatchSet invariants; throws ValidationError naming the field.
inline void validate_matchset(const MatchSet& ms) {
  auto check_kps = [](const std::vector<Keypoint>& kps, const ImageRef& img, const std::string& field) {
    for (std::size_t i = 0; i < kps.size(); ++i) {
      const auto& k = kps[i];
      const std::string where = field + "[" + std::to_string(i) + "]";
      if (!std::isfinite(k.x) || !std::isfinite(k.y)) throw ValidationError(where + ": non-finite coordinate");
      if (img.width > 0 && (k.x < 0 || k.x >= img.width)) throw ValidationError(where + ": x outside image");
      if (img.height > 0 && (k.y < 0 || k.y >= img.height)) throw ValidationError(where + ": y outside image");
    }
  };
  check_kps(ms.keypoints0, ms.image0, "keypoints0");
  check_kps(ms.keypoints1, ms.image1, "keypoints1");
  std::set<std::size_t> used0, used1;
  for (std::size_t m = 0; m < ms.matches.size(); ++m) {
    const auto& mt = ms.matches[m];
    const std::string where = "matches[" + std::to_string(m) + "]";
    if (mt.index0 >= ms.keypoints0.size()) {
      throw ValidationError(where + "[0]: index out of range (" + std::to_string(mt.index0) +
                            " >= " + std::to_string(ms.keypoints0.size()) + ")");
    }
    if (mt.index1 >= ms.keypoints1.size()) {
      throw ValidationError(where + "[1]: index out of range (" + std::to_string(mt.index1) +
                            " >= " + std::to_string(ms.keypoints1.size()) + ")");
    }
    if (!std::isfinite(mt.score)) throw ValidationError(where + "[2]: score must be finite");
    if (!used0.insert(mt.index0).second) throw ValidationError(where + "[0]: keypoint matched more than once");
    if (!used1.insert(mt.index1).second) throw ValidationError(where + "[1]: keypoint matched more than once");
  }
}

namespace matchset_detail {

inline ImageRef image_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field + ": expected an object");
  ImageRef r;
  if (!j.contains("path") || !j["path"].is_string()) throw ValidationError(field + ".path: expected a string");
  r.path = j["path"].get<std::string>();
  for (const char* k : {"width", "height"}) {
    if (!j.contains(k) || !j[k].is_number_integer() || j[k].get<long long>() <= 0) {
      throw ValidationError(field + "." + k + ": expected a positive integer");
    }
  }
  r.width = j["width"].get<int>();
  r.height = j["height"].get<int>();
  return r;
}

inline std::vector<Keypoint> keypoints_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field + ": expected an array");
  std::vector<Keypoint> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (!e.is_array() || e.size() < 2 || !e[0].is_number() || !e[1].is_number()) {
      throw ValidationError(field + "[" + std::to_string(i) + "]: expected [x, y]");
    }
    Keypoint k;
    k.x = e[0].get<double>();
    k.y = e[1].get<double>();
    out.push_back(k);
  }
  return out;
}

}  // namespace matchset_detail

// Parses and validates a matchset/1 document.
inline MatchSet matchset_from_json(const nlohmann::json& j) {
  using namespace matchset_detail;
  if (!j.is_object()) throw ValidationError("matchset: expected a JSON object");
  if (!j.contains("schema") || j["schema"] != "matchset/1") {
    throw ValidationError("schema: expected \"matchset/1\"");
  }
  MatchSet ms;
  for (const char* k : {"image0", "image1", "keypoints0", "keypoints1", "matches", "meta"}) {
    if (!j.contains(k)) throw ValidationError(std::string(k) + ": missing");
  }
  ms.image0 = image_from_json(j["image0"], "image0");
  ms.image1 = image_from_json(j["image1"], "image1");
  ms.keypoints0 = keypoints_from_json(j["keypoints0"], "keypoints0");
  ms.keypoints1 = keypoints_from_json(j["keypoints1"], "keypoints1");
  const auto& m = j["matches"];
  if (!m.is_array()) throw ValidationError("matches: expected an array");
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& e = m[i];
    const std::string where = "matches[" + std::to_string(i) + "]";
    if (!e.is_array() || e.size() != 3) throw ValidationError(where + ": expected [i0, i1, score]");
    for (int k = 0; k < 2; ++k) {
      if (!e[k].is_number_integer() || e[k].get<long long>() < 0) {
        throw ValidationError(where + "[" + std::to_string(k) + "]: expected a non-negative integer");
      }
    }
    if (!e[2].is_number()) throw ValidationError(where + "[2]: expected a number");
    ms.matches.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
  }
  const auto& meta = j["meta"];
  if (!meta.is_object()) throw ValidationError("meta: expected an object");
  if (!meta.contains("matcher") || !meta["matcher"].is_string()) {
    throw ValidationError("meta.matcher: expected a string");
  }
  ms.matcher = meta["matcher"].get<std::string>();
  if (!meta.contains("resize_long_edge")) throw ValidationError("meta.resize_long_edge: missing (use null)");
  const auto& rle = meta["resize_long_edge"];
  if (rle.is_number_integer() && rle.get<long long>() > 0) {
    ms.resize_long_edge = rle.get<int>();
  } else if (!rle.is_null()) {
    throw ValidationError("meta.resize_long_edge: expected a positive integer or null");
  }
  for (auto it = meta.begin(); it != meta.end(); ++it) {
    if (it.key() != "matcher" && it.key() != "resize_long_edge") ms.meta_extra[it.key()] = it.value();
  }
  validate_matchset(ms);
  return ms;
}

inline MatchSet load_matchset(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("matchset: invalid JSON: ") + e.what());
  }
  return matchset_from_json(j);
}

inline nlohmann::json matchset_to_json(const MatchSet& ms) {
  auto kps = [](const std::vector<Keypoint>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& k : v) a.push_back({k.x, k.y});
    return a;
  };
  nlohmann::json matches = nlohmann::json::array();
  for (const auto& m : ms.matches) matches.push_back({m.index0, m.index1, m.score});
  nlohmann::json meta = ms.meta_extra.is_object() ? ms.meta_extra : nlohmann::json::object();
  meta["matcher"] = ms.matcher;
  meta["resize_long_edge"] = ms.resize_long_edge ? nlohmann::json(*ms.resize_long_edge) : nlohmann::json(nullptr);
  return {{"schema", "matchset/1"},
          {"image0", {{"path", ms.image0.path}, {"width", ms.image0.width}, {"height", ms.image0.height}}},
          {"image1", {{"path", ms.image1.path}, {"width", ms.image1.width}, {"height", ms.image1.height}}},
          {"keypoints0", kps(ms.keypoints0)},
          {"keypoints1", kps(ms.keypoints1)},
          {"matches", matches},
          {"meta", meta}};
}

}  // namespace facadeloc
