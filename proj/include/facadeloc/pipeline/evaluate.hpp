#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "facadeloc/camera/camera.hpp"
#include "facadeloc/core/errors.hpp"
#include "facadeloc/core/io.hpp"
#include "facadeloc/features/matchset.hpp"
#include "facadeloc/features/orb.hpp"
#include "facadeloc/geo/geo_transform.hpp"
#include "facadeloc/gml/citygml.hpp"
#include "facadeloc/gml/face_filter.hpp"
#include "facadeloc/image/image.hpp"
#include "facadeloc/metrics/summary.hpp"
#include "facadeloc/pipeline/config.hpp"
#include "facadeloc/pipeline/manifest.hpp"
#include "facadeloc/robust/pnp.hpp"

#ifndef FACADELOC_VERSION
#define FACADELOC_VERSION "0.0.0"
#endif

namespace facadeloc {

inline constexpr const char* kBuiltinMethod = "orb";

struct RunReport {
  std::vector<PairResult> pairs;  // sorted by pair_id
  SummaryTable summary;
  PipelineConfig config;
  nlohmann::json provenance = nlohmann::json::object();
  std::vector<std::string> warnings;
};

// Builtin classical matcher on two gray images. Detection runs on the resized
// images when requested; keypoints come back in original pixels.
inline MatchSet builtin_match(const Image& gray0, const Image& gray1, const PipelineConfig& cfg) {
  auto side = [&](const Image& g, std::vector<Keypoint>& kps_out) {
    Resized r = cfg.resize_long_edge ? resize_long_edge(g, *cfg.resize_long_edge) : Resized{g, 1.0, 1.0};
    auto kps = detect(r.image, cfg.orb);
    auto d = describe(r.image, kps, cfg.orb);
    for (std::size_t i : d.kept) {
      Keypoint k = kps[i];
      k.x *= r.scale_x;
      k.y *= r.scale_y;
      kps_out.push_back(k);
    }
    return std::move(d.descriptors);
  };
  MatchSet ms;
  ms.image0 = {"", gray0.width(), gray0.height()};
  ms.image1 = {"", gray1.width(), gray1.height()};
  ms.matcher = kBuiltinMethod;
  ms.resize_long_edge = cfg.resize_long_edge;
  const auto d0 = side(gray0, ms.keypoints0);
  const auto d1 = side(gray1, ms.keypoints1);
  ms.matches = match_nn(d0, d1, cfg.match);
  return ms;
}

namespace eval_detail {

struct PreparedPair {
  PairSpec spec;
  std::shared_ptr<const TexturedFace> face;
  std::filesystem::path texture_file;
  CameraRecord camera;
  std::filesystem::path image_file;
  std::filesystem::path match_file;
};

inline std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Resolves and loads everything a run needs up front, so that missing or
// malformed manifest inputs abort before any pair is processed.
inline std::vector<PreparedPair> prepare(const PairManifest& manifest, const PipelineConfig& cfg,
                                         std::vector<std::string>& warnings) {
  namespace fs = std::filesystem;
  validate_pair_ids(manifest);
  std::vector<std::string> missing;
  auto need = [&](const fs::path& p) {
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) missing.push_back(p.string());
  };
  for (const auto& p : manifest.pairs) {
    need(manifest.resolve(p.gml_path));
    need(manifest.resolve(p.camera_path));
    need(manifest.resolve(p.image_path));
    if (!p.builtin()) need(manifest.resolve(p.match_source));
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    std::string msg = "manifest: missing files:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }

  std::map<std::string, std::map<std::string, std::shared_ptr<TexturedFace>>> gml_cache;
  std::vector<PreparedPair> out;
  for (const auto& p : manifest.pairs) {
    const fs::path gml = manifest.resolve(p.gml_path);
    auto& faces = gml_cache[gml.string()];
    if (faces.empty()) {
      IngestOptions io;
      io.vertical_offset_m = cfg.vertical_offset_m;
      auto parsed = parse_citygml(read_file(gml), io);
      for (auto& w : parsed.warnings) warnings.push_back(gml.string() + ": " + w.face_id + ": " + w.message);
      DirectoryImageStore store(gml.parent_path());
      auto resolved = resolve_image_sizes(std::move(parsed.faces), store);
      for (auto& w : resolved.warnings) {
        warnings.push_back(gml.string() + ": " + w.face_id + ": " + w.message);
      }
      for (auto& f : resolved.faces) {
        const auto diag = diagnose_face(f, cfg.planarity_tolerance_m);
        if (!diag.planar) {
          warnings.push_back(gml.string() + ": " + f.face_id + ": non-planar face (max plane distance " +
                             format_g6(diag.max_plane_distance_m) + " m)");
        }
        const std::string id = f.face_id;
        faces[id] = std::make_shared<TexturedFace>(std::move(f));
      }
      if (faces.empty()) throw ValidationError(gml.string() + ": no usable textured faces");
    }
    auto it = faces.find(p.face_id);
    if (it == faces.end()) {
      throw ValidationError("pair " + p.pair_id + ": face '" + p.face_id + "' not found (or texture unreadable) in " +
                            gml.string());
    }
    PreparedPair pp;
    pp.spec = p;
    pp.face = it->second;
    pp.texture_file = DirectoryImageStore(gml.parent_path()).resolve(it->second->texture_path);
    nlohmann::json cj;
    try {
      cj = nlohmann::json::parse(read_file(manifest.resolve(p.camera_path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("pair " + p.pair_id + ": camera: " + e.what());
    }
    pp.camera = camera_from_json(cj);
    pp.image_file = manifest.resolve(p.image_path);
    if (!p.builtin()) pp.match_file = manifest.resolve(p.match_source);
    out.push_back(std::move(pp));
  }
  return out;
}

inline std::uint64_t pair_seed(std::uint64_t seed, const std::string& pair_id) {
  // splitmix64 finalizer over the run seed mixed with the pair id
  std::uint64_t z = seed ^ fnv1a(pair_id);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline PairResult evaluate_pair(const PreparedPair& pp, const PipelineConfig& cfg) {
  PairResult r;
  r.pair_id = pp.spec.pair_id;
  r.method = pp.spec.builtin() ? kBuiltinMethod : "file";
  r.precision_at = precision_at(std::vector<double>{}, cfg.metrics.precision_thresholds_px);
  auto fail = [&](std::string why) {
    r.failure = true;
    r.failure_reason = std::move(why);
    return r;
  };
  try {
    const TexturedFace& face = *pp.face;
    const Intrinsics& k = pp.camera.intrinsics;
    MatchSet ms;
    const auto t0 = std::chrono::steady_clock::now();
    if (pp.spec.builtin()) {
      const Image tex = to_gray(read_png(pp.texture_file));
      const Image cam = to_gray(read_png(pp.image_file));
      if (cam.width() != k.width || cam.height() != k.height) {
        return fail("camera image is " + std::to_string(cam.width()) + "x" + std::to_string(cam.height()) +
                    ", intrinsics say " + std::to_string(k.width) + "x" + std::to_string(k.height));
      }
      ms = builtin_match(tex, cam, cfg);
    } else {
      ms = load_matchset(read_file(pp.match_file));
      r.method = ms.matcher;
      if (ms.image0.width != face.image_width || ms.image0.height != face.image_height) {
        return fail("match file image0 size differs from the texture");
      }
      if (ms.image1.width != k.width || ms.image1.height != k.height) {
        return fail("match file image1 size differs from the camera intrinsics");
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    if (cfg.record_timing) r.runtime_s = std::chrono::duration<double>(t1 - t0).count();

    if (cfg.exclude_outside_polygon) {
      std::vector<Match> kept;
      for (const auto& m : ms.matches) {
        const auto& kp = ms.keypoints0[m.index0];
        if (st_inside_polygon(pixel_to_st({kp.x, kp.y}, face.image_width, face.image_height), face)) {
          kept.push_back(m);
        }
      }
      ms.matches = std::move(kept);
    }

    r.num_keypoints0 = ms.keypoints0.size();
    r.num_keypoints1 = ms.keypoints1.size();
    r.num_matches = ms.matches.size();
    r.per_match_reproj_px = reprojection_errors(ms, face, pp.camera);
    r.precision_at = precision_at(r.per_match_reproj_px, cfg.metrics.precision_thresholds_px);
    if (ms.matches.empty()) return fail("no matches");

    const FaceMapper mapper(face);
    std::vector<WorldPoint> world;
    std::vector<PixelPoint> pixels;
    for (const auto& m : ms.matches) {
      const auto& a = ms.keypoints0[m.index0];
      const auto& b = ms.keypoints1[m.index1];
      world.push_back(mapper({a.x, a.y}));
      pixels.push_back({b.x, b.y});
    }
    const CenteredPoints centered = center_points(world);
    RansacConfig rc = cfg.ransac;
    rc.seed = pair_seed(cfg.ransac.seed, r.pair_id);
    const PoseEstimate est = pnp_ransac(centered.points, pixels, k, rc);
    r.num_inliers = est.success ? est.num_inliers() : 0;
    if (!est.success) return fail(ms.matches.size() < 4 ? "fewer than 4 matches" : "pose estimation failed");

    const Pose& gt = pp.camera.gt_pose;
    r.rot_err_deg = rotation_error_deg(est.pose.R, gt.R);
    r.trans_err_m = translation_error_m(est.pose.t, offset_gt_translation(gt, centered.offset));
    r.center_err_m = ((est.pose.camera_center() + centered.offset) - gt.camera_center()).norm();
    r.mean_inlier_reproj_px = est.mean_inlier_reproj_px;
    r.failure = false;
    return r;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

}  // namespace eval_detail

// Evaluates every pair of the manifest. Input problems (missing files, bad
// GML, unknown faces) throw before work starts; anything that goes wrong
// inside a pair is recorded as that pair's failure.
inline RunReport run_evaluation(const PairManifest& manifest, const PipelineConfig& cfg) {
  using namespace eval_detail;
  cfg.validate();
  RunReport report;
  report.config = cfg;
  const std::string started = utc_now();
  auto prepared = prepare(manifest, cfg, report.warnings);

  std::vector<PairResult> results(prepared.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < prepared.size();) results[i] = evaluate_pair(prepared[i], cfg);
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), prepared.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  std::sort(results.begin(), results.end(),
            [](const PairResult& a, const PairResult& b) { return a.pair_id < b.pair_id; });
  report.pairs = std::move(results);
  if (!report.pairs.empty()) report.summary = aggregate(report.pairs, cfg.metrics);
  report.provenance = {{"toolkit", "facadeloc"},
                       {"version", FACADELOC_VERSION},
                       {"config_hash", config_hash(cfg)},
                       {"seed", cfg.ransac.seed},
                       {"started_utc", started},
                       {"finished_utc", utc_now()},
                       {"num_pairs", report.pairs.size()},
                       {"failure_accounting", "means over all pairs; failed pairs count as infinite error, zero "
                                              "precision and zero inliers"},
                       {"visibility_rule", "all vertices in front, projected overlap >= min_overlap of image area"},
                       {"auc_integration", "exact step function"}};
  return report;
}

inline RunReport run_evaluation(const PairManifest& manifest) { return run_evaluation(manifest, manifest.defaults); }

}  // namespace facadeloc
