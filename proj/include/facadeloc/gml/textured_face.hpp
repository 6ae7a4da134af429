#pragma once

#include <string>
#include <vector>

#include "facadeloc/core/types.hpp"

namespace facadeloc {

// One planar model face with its texture. Rings are open (no repeated closing
// vertex) and correspond index by index.
struct TexturedFace {
  std::string face_id;
  std::string texture_path;
  std::vector<StPoint> st_ring;
  std::vector<WorldPoint> world_ring;
  int image_width = 0;  // 0 until resolved against the texture image
  int image_height = 0;

  bool has_image_size() const { return image_width > 0 && image_height > 0; }
};

// Non-fatal problem found while reading or filtering faces.
struct IngestWarning {
  std::string face_id;
  std::string message;

  friend bool operator==(const IngestWarning&, const IngestWarning&) = default;
};

}  // namespace facadeloc
