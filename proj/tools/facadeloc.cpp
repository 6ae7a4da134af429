// facadeloc command line: ingest, synth, pairs, run, report.
// Exit codes: 0 success, 1 validation error, 2 any other error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "facadeloc/facadeloc.hpp"

namespace fs = std::filesystem;
using namespace facadeloc;
using nlohmann::json;

namespace {

json load_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

std::optional<int> parse_resize(const std::string& s) {
  if (s == "off" || s == "none") return std::nullopt;
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("--resize-long-edge expects a pixel count or 'off', got '" + s + "'");
  }
}

std::string rel(const fs::path& target, const fs::path& base) {
  return fs::absolute(target).lexically_normal().lexically_relative(fs::absolute(base).lexically_normal()).string();
}

json face_to_json(const TexturedFace& f, const FaceDiagnostics& d) {
  json st = json::array(), world = json::array();
  for (const auto& p : f.st_ring) st.push_back({p.s, p.t});
  for (const auto& p : f.world_ring) world.push_back({p.x(), p.y(), p.z()});
  return {{"face_id", f.face_id},
          {"texture", f.texture_path},
          {"image_width", f.image_width},
          {"image_height", f.image_height},
          {"st_ring", st},
          {"world_ring", world},
          {"planar", d.planar},
          {"max_plane_distance_m", d.max_plane_distance_m}};
}

void ensure_dir(const fs::path& d) {
  std::error_code ec;
  fs::create_directories(d, ec);
  if (!fs::is_directory(d)) throw IoError("cannot create output directory " + d.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"facadeloc - localize camera images against textured facade models"};
  app.set_version_flag("--version", std::string(FACADELOC_VERSION));
  app.require_subcommand(1);

  // ingest
  std::string ingest_gml, ingest_out = ".", ingest_config;
  auto* ingest = app.add_subcommand("ingest", "read a CityGML file and write the usable textured faces as JSON");
  ingest->add_option("gml", ingest_gml, "CityGML file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--config", ingest_config, "JSON config (filter, vertical_offset_m, planarity_tolerance_m)")->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "output directory");

  // synth
  SceneConfig scene_cfg;
  std::string synth_out = ".";
  double synth_outliers = 0.0, synth_noise = 0.0;
  std::size_t synth_matches = 400;
  auto* synth = app.add_subcommand("synth", "write a synthetic facade scene with ground truth");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--seed", scene_cfg.seed, "scene seed");
  synth->add_option("--yaw", scene_cfg.yaw_deg, "camera yaw around the facade, degrees");
  synth->add_option("--pitch", scene_cfg.pitch_deg, "camera elevation, degrees");
  synth->add_option("--standoff", scene_cfg.standoff_m, "camera distance to the facade center, meters");
  synth->add_option("--gt-matches", synth_matches, "number of ground-truth correspondences");
  synth->add_option("--outliers", synth_outliers, "fraction of correspondences replaced by random pixels");
  synth->add_option("--noise", synth_noise, "Gaussian noise on camera keypoints, pixels");

  // pairs
  std::string pairs_gml, pairs_out = ".", pairs_config, pairs_matcher = "builtin", pairs_matches_dir = "matches";
  std::vector<std::string> pairs_cameras;
  auto* pairs = app.add_subcommand("pairs", "build a pair manifest from a GML file and camera records");
  pairs->add_option("--gml", pairs_gml, "CityGML file")->required()->check(CLI::ExistingFile);
  pairs->add_option("--camera", pairs_cameras, "camera record JSON (repeatable)")->required()->check(CLI::ExistingFile);
  pairs->add_option("--config", pairs_config, "JSON config (min_overlap, filter, ...)")->check(CLI::ExistingFile);
  pairs->add_option("--matcher", pairs_matcher, "builtin | file")->check(CLI::IsMember({"builtin", "file"}));
  pairs->add_option("--matches-dir", pairs_matches_dir, "directory of <pair_id>.matchset.json files, for --matcher file");
  pairs->add_option("--out", pairs_out, "output directory");

  // run
  std::string run_manifest, run_out = ".", run_config, run_resize, run_matcher, run_matches_dir = "matches";
  std::optional<std::uint64_t> run_seed;
  std::optional<double> run_threshold;
  std::optional<int> run_jobs;
  auto* run = app.add_subcommand("run", "evaluate every pair of a manifest");
  run->add_option("manifest", run_manifest, "manifest JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--config", run_config, "JSON config applied over the manifest defaults")->check(CLI::ExistingFile);
  run->add_option("--seed", run_seed, "RANSAC seed");
  run->add_option("--ransac-threshold", run_threshold, "inlier threshold in pixels (default 10)");
  run->add_option("--resize-long-edge", run_resize, "long edge in pixels for the builtin matcher, or 'off'");
  run->add_option("--matcher", run_matcher, "builtin | file, overrides the manifest")
      ->check(CLI::IsMember({"builtin", "file"}));
  run->add_option("--matches-dir", run_matches_dir, "match file directory used with --matcher file");
  run->add_option("--jobs", run_jobs, "worker threads");
  run->add_option("--out", run_out, "output directory");

  // report
  std::string report_in, report_out = ".", report_config;
  auto* report = app.add_subcommand("report", "re-emit CSV / SVG / JSON from a report.json");
  report->add_option("report", report_in, "report.json")->required()->check(CLI::ExistingFile);
  report->add_option("--config", report_config, "JSON config whose metric thresholds replace the stored ones")->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) {
      PipelineConfig cfg;
      if (!ingest_config.empty()) apply_config_json(cfg, load_json(ingest_config));
      IngestOptions io;
      io.vertical_offset_m = cfg.vertical_offset_m;
      auto parsed = parse_citygml(read_file(ingest_gml), io);
      DirectoryImageStore store(fs::path(ingest_gml).parent_path());
      auto filtered = filter_faces(parsed.faces, cfg.filter, store);
      json faces = json::array(), warnings = json::array();
      for (const auto& f : filtered.faces) faces.push_back(face_to_json(f, diagnose_face(f, cfg.planarity_tolerance_m)));
      for (const auto& w : parsed.warnings) warnings.push_back({{"face_id", w.face_id}, {"message", w.message}});
      for (const auto& w : filtered.warnings) warnings.push_back({{"face_id", w.face_id}, {"message", w.message}});
      ensure_dir(ingest_out);
      write_file_atomic(fs::path(ingest_out) / "faces.json",
                        json{{"schema", "faces/1"}, {"source", ingest_gml}, {"faces", faces}, {"warnings", warnings}}
                                .dump(2) + "\n");
      for (const auto& w : warnings) std::cerr << "warning: " << w["face_id"].get<std::string>() << ": "
                                               << w["message"].get<std::string>() << "\n";
      std::cout << faces.size() << " faces kept of " << parsed.faces.size() << "\n";
    } else if (*synth) {
      const SynthScene scene = generate_scene(scene_cfg);
      MatchSet gt = ground_truth_matches(scene, synth_matches, scene_cfg.seed + 1);
      if (synth_outliers > 0 || synth_noise > 0) {
        gt = corrupt_matches(gt, synth_outliers, synth_noise, scene_cfg.seed + 2).matches;
        gt.matcher = "ground-truth-corrupted";
      }
      const fs::path out(synth_out);
      ensure_dir(out);
      write_synth_fixture(scene, gt, out);
      std::cout << "scene written to " << out.string() << "\n";
    } else if (*pairs) {
      PipelineConfig cfg;
      if (!pairs_config.empty()) apply_config_json(cfg, load_json(pairs_config));
      IngestOptions io;
      io.vertical_offset_m = cfg.vertical_offset_m;
      auto parsed = parse_citygml(read_file(pairs_gml), io);
      DirectoryImageStore store(fs::path(pairs_gml).parent_path());
      auto filtered = filter_faces(parsed.faces, cfg.filter, store);
      const fs::path out(pairs_out);
      ensure_dir(out);
      std::vector<CameraEntry> cams;
      for (const auto& c : pairs_cameras) {
        CameraEntry e{camera_from_json(load_json(c)), rel(c, out)};
        cams.push_back(std::move(e));
      }
      PairManifest m = build_pairs(filtered.faces, rel(pairs_gml, out), cams, cfg);
      if (pairs_matcher == "file") {
        for (auto& p : m.pairs) p.match_source = (fs::path(pairs_matches_dir) / (p.pair_id + ".matchset.json")).string();
      }
      write_file_atomic(out / "manifest.json", manifest_to_json(m).dump(2) + "\n");
      std::cout << m.pairs.size() << " pairs\n";
    } else if (*run) {
      PairManifest m = load_manifest(run_manifest);
      PipelineConfig cfg = m.defaults;
      if (!run_config.empty()) apply_config_json(cfg, load_json(run_config));
      if (run_seed) cfg.ransac.seed = *run_seed;
      if (run_threshold) cfg.ransac.threshold = *run_threshold;
      if (!run_resize.empty()) cfg.resize_long_edge = parse_resize(run_resize);
      if (run_jobs) cfg.jobs = *run_jobs;
      cfg.validate();
      if (run_matcher == "builtin") {
        for (auto& p : m.pairs) p.match_source = kBuiltinMatcher;
      } else if (run_matcher == "file") {
        for (auto& p : m.pairs) {
          if (p.builtin()) p.match_source = (fs::path(run_matches_dir) / (p.pair_id + ".matchset.json")).string();
        }
      }
      ensure_dir(run_out);
      const RunReport r = run_evaluation(m, cfg);
      emit_report(r, run_out);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      std::size_t failed = 0;
      for (const auto& p : r.pairs) failed += p.failure ? 1 : 0;
      std::cout << r.pairs.size() << " pairs evaluated, " << failed << " failed\n";
      std::cout << summary_to_csv(r.summary, cfg.metrics);
    } else if (*report) {
      RunReport r = report_from_json(load_json(report_in));
      if (!report_config.empty()) {
        apply_config_json(r.config, load_json(report_config));
        if (!r.pairs.empty()) r.summary = aggregate(r.pairs, r.config.metrics);
      }
      ensure_dir(report_out);
      emit_report(r, report_out);
      std::cout << summary_to_csv(r.summary, r.config.metrics);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
