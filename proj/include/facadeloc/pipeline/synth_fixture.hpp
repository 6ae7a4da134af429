#pragma once

#include <filesystem>

#include "facadeloc/core/io.hpp"
#include "facadeloc/features/matchset.hpp"
#include "facadeloc/image/image.hpp"
#include "facadeloc/pipeline/manifest.hpp"
#include "facadeloc/synth/scene.hpp"

namespace facadeloc {

// Writes a synthetic scene as an evaluation-ready directory: texture and view
// PNGs, facade.gml, camera.json, gt.matchset.json, plus manifest.json (builtin
// matcher) and manifest_gt.json (the match file).
inline void write_synth_fixture(const SynthScene& scene, const MatchSet& matches, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& cfg = scene.config;
  write_png(dir / cfg.texture_name, scene.texture);
  write_png(dir / cfg.view_name, scene.view_image);
  PairManifest builtin_m;
  builtin_m.pairs.push_back({"synth", "facade.gml", scene.face.face_id, "camera.json", cfg.view_name, kBuiltinMatcher});
  PairManifest file_m = builtin_m;
  file_m.pairs[0].match_source = "gt.matchset.json";
  AtomicWriter w;
  w.add(dir / "facade.gml", scene.gml_document);
  w.add(dir / "camera.json", camera_to_json(scene.camera).dump(2) + "\n");
  w.add(dir / "gt.matchset.json", matchset_to_json(matches).dump(2) + "\n");
  w.add(dir / "manifest.json", manifest_to_json(builtin_m).dump(2) + "\n");
  w.add(dir / "manifest_gt.json", manifest_to_json(file_m).dump(2) + "\n");
  w.commit();
}

}  // namespace facadeloc
