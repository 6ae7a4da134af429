#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "facadeloc/core/errors.hpp"
#include "facadeloc/features/matchset.hpp"
#include "facadeloc/features/orb.hpp"
#include "facadeloc/gml/face_filter.hpp"
#include "facadeloc/metrics/summary.hpp"
#include "facadeloc/robust/ransac.hpp"

namespace facadeloc {

struct PipelineConfig {
  RansacConfig ransac;
  MetricConfig metrics;
  std::optional<int> resize_long_edge;  // builtin matcher only; off by default
  double min_overlap = 0.05;            // visibility rule, fraction of the camera image area
  int jobs = 1;
  bool record_timing = true;
  bool exclude_outside_polygon = false;  // drop matches whose texture point lies outside the face polygon
  FilterPolicy filter;
  double vertical_offset_m = 0.0;
  double planarity_tolerance_m = 0.05;
  OrbOptions orb;
  MatchOptions match;

  void validate() const {
    ransac.validate();
    metrics.validate();
    filter.validate();
    if (resize_long_edge && *resize_long_edge < 16) throw ValidationError("resize_long_edge must be >= 16 or null");
    if (!(min_overlap >= 0 && min_overlap <= 1)) throw ValidationError("min_overlap must lie in [0, 1]");
    if (jobs < 1) throw ValidationError("jobs must be >= 1");
    if (!(planarity_tolerance_m >= 0)) throw ValidationError("planarity_tolerance_m must be >= 0");
    if (orb.max_keypoints < 1) throw ValidationError("matcher.max_keypoints must be >= 1");
    if (orb.fast_threshold < 1 || orb.fast_threshold > 254) throw ValidationError("matcher.fast_threshold out of range");
    if (match.max_distance < 0 || match.max_distance > 256) throw ValidationError("matcher.max_distance out of range");
  }
};

namespace config_detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ValidationError(where + ": unknown key '" + k + "'");
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& target, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

}  // namespace config_detail

// Applies the keys present in `j` on top of `cfg`. Unknown keys are errors.
inline void apply_config_json(PipelineConfig& cfg, const nlohmann::json& j) {
  using namespace config_detail;
  reject_unknown(j,
                 {"ransac", "metrics", "resize_long_edge", "min_overlap", "jobs", "record_timing",
                  "exclude_outside_polygon", "filter", "vertical_offset_m", "planarity_tolerance_m", "matcher"},
                 "config");
  if (j.contains("ransac")) {
    const auto& r = j["ransac"];
    reject_unknown(r, {"threshold", "confidence", "max_iterations", "seed"}, "config.ransac");
    read(r, "threshold", cfg.ransac.threshold, "config.ransac");
    read(r, "confidence", cfg.ransac.confidence, "config.ransac");
    read(r, "max_iterations", cfg.ransac.max_iterations, "config.ransac");
    read(r, "seed", cfg.ransac.seed, "config.ransac");
  }
  if (j.contains("metrics")) {
    const auto& m = j["metrics"];
    reject_unknown(m, {"precision_px", "auc_rotation_deg", "auc_translation_m"}, "config.metrics");
    read(m, "precision_px", cfg.metrics.precision_thresholds_px, "config.metrics");
    read(m, "auc_rotation_deg", cfg.metrics.auc_rotation_deg, "config.metrics");
    read(m, "auc_translation_m", cfg.metrics.auc_translation_m, "config.metrics");
  }
  if (j.contains("resize_long_edge")) {
    if (j["resize_long_edge"].is_null()) {
      cfg.resize_long_edge.reset();
    } else {
      int v = 0;
      read(j, "resize_long_edge", v, "config");
      cfg.resize_long_edge = v;
    }
  }
  read(j, "min_overlap", cfg.min_overlap, "config");
  read(j, "jobs", cfg.jobs, "config");
  read(j, "record_timing", cfg.record_timing, "config");
  read(j, "exclude_outside_polygon", cfg.exclude_outside_polygon, "config");
  read(j, "vertical_offset_m", cfg.vertical_offset_m, "config");
  read(j, "planarity_tolerance_m", cfg.planarity_tolerance_m, "config");
  if (j.contains("filter")) {
    const auto& f = j["filter"];
    reject_unknown(f, {"min_width", "min_height", "max_nodata_fraction"}, "config.filter");
    read(f, "min_width", cfg.filter.min_width, "config.filter");
    read(f, "min_height", cfg.filter.min_height, "config.filter");
    read(f, "max_nodata_fraction", cfg.filter.max_nodata_fraction, "config.filter");
  }
  if (j.contains("matcher")) {
    const auto& m = j["matcher"];
    reject_unknown(m, {"max_keypoints", "fast_threshold", "max_distance", "cross_check"}, "config.matcher");
    read(m, "max_keypoints", cfg.orb.max_keypoints, "config.matcher");
    read(m, "fast_threshold", cfg.orb.fast_threshold, "config.matcher");
    read(m, "max_distance", cfg.match.max_distance, "config.matcher");
    read(m, "cross_check", cfg.match.cross_check, "config.matcher");
  }
  cfg.validate();
}

inline nlohmann::json config_to_json(const PipelineConfig& cfg) {
  return {{"ransac",
           {{"threshold", cfg.ransac.threshold},
            {"confidence", cfg.ransac.confidence},
            {"max_iterations", cfg.ransac.max_iterations},
            {"seed", cfg.ransac.seed}}},
          {"metrics",
           {{"precision_px", cfg.metrics.precision_thresholds_px},
            {"auc_rotation_deg", cfg.metrics.auc_rotation_deg},
            {"auc_translation_m", cfg.metrics.auc_translation_m}}},
          {"resize_long_edge", cfg.resize_long_edge ? nlohmann::json(*cfg.resize_long_edge) : nlohmann::json(nullptr)},
          {"min_overlap", cfg.min_overlap},
          {"jobs", cfg.jobs},
          {"record_timing", cfg.record_timing},
          {"exclude_outside_polygon", cfg.exclude_outside_polygon},
          {"filter",
           {{"min_width", cfg.filter.min_width},
            {"min_height", cfg.filter.min_height},
            {"max_nodata_fraction", cfg.filter.max_nodata_fraction}}},
          {"vertical_offset_m", cfg.vertical_offset_m},
          {"planarity_tolerance_m", cfg.planarity_tolerance_m},
          {"matcher",
           {{"max_keypoints", cfg.orb.max_keypoints},
            {"fast_threshold", cfg.orb.fast_threshold},
            {"max_distance", cfg.match.max_distance},
            {"cross_check", cfg.match.cross_check}}}};
}

// FNV-1a over the canonical JSON text (object keys are sorted by nlohmann::json).
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Hash of everything that can change results; jobs and timing are excluded.
inline std::string config_hash(const PipelineConfig& cfg) {
  nlohmann::json j = config_to_json(cfg);
  j.erase("jobs");
  j.erase("record_timing");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

}  // namespace facadeloc
