#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "facadeloc/core/errors.hpp"
#include "facadeloc/gml/textured_face.hpp"
#include "facadeloc/image/image.hpp"

namespace facadeloc {

struct TextureInfo {
  int width = 0;
  int height = 0;
  double nodata_fraction = 0.0;
};

// Resolves texture references to image properties.
class ImageStore {
 public:
  virtual ~ImageStore() = default;
  // Throws IoError when the texture cannot be read.
  virtual TextureInfo info(const std::string& texture_path) const = 0;
  virtual Image load(const std::string& texture_path) const = 0;
};

// Textures as PNG files relative to a base directory (typically the directory
// holding the GML file). Results are cached.
class DirectoryImageStore : public ImageStore {
 public:
  explicit DirectoryImageStore(std::filesystem::path base) : base_(std::move(base)) {}

  std::filesystem::path resolve(const std::string& texture_path) const {
    std::filesystem::path p(texture_path);
    return p.is_absolute() ? p : base_ / p;
  }

  TextureInfo info(const std::string& texture_path) const override {
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(texture_path); it != cache_.end()) return it->second;
    }
    const Image img = load(texture_path);
    TextureInfo ti{img.width(), img.height(), nodata_fraction(img)};
    std::lock_guard lock(mutex_);
    cache_[texture_path] = ti;
    return ti;
  }

  Image load(const std::string& texture_path) const override { return read_png(resolve(texture_path)); }

 private:
  std::filesystem::path base_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, TextureInfo> cache_;
};

struct FilterPolicy {
  int min_width = 64;
  int min_height = 64;
  double max_nodata_fraction = 0.5;

  void validate() const {
    if (min_width < 1 || min_height < 1) throw ValidationError("filter policy: minimum size must be >= 1");
    if (!(max_nodata_fraction >= 0.0 && max_nodata_fraction <= 1.0)) {
      throw ValidationError("filter policy: max_nodata_fraction must lie in [0, 1]");
    }
  }
};

struct FilterResult {
  std::vector<TexturedFace> faces;
  std::vector<IngestWarning> warnings;
};

// Fills image_width / image_height from the store. Faces whose texture cannot
// be read are dropped with a warning.
inline FilterResult resolve_image_sizes(std::vector<TexturedFace> faces, const ImageStore& images) {
  FilterResult out;
  for (auto& f : faces) {
    try {
      const TextureInfo ti = images.info(f.texture_path);
      f.image_width = ti.width;
      f.image_height = ti.height;
      out.faces.push_back(std::move(f));
    } catch (const Error& e) {
      out.warnings.push_back({f.face_id, std::string("unreadable texture: ") + e.what()});
    }
  }
  return out;
}

// Keeps faces whose texture is large enough and not dominated by no-data
// pixels. Order is preserved; image sizes are filled in on the survivors.
inline FilterResult filter_faces(const std::vector<TexturedFace>& faces, const FilterPolicy& policy,
                                 const ImageStore& images) {
  policy.validate();
  FilterResult out;
  for (const auto& f : faces) {
    TextureInfo ti;
    try {
      ti = images.info(f.texture_path);
    } catch (const Error& e) {
      out.warnings.push_back({f.face_id, std::string("unreadable texture: ") + e.what()});
      continue;
    }
    if (ti.width < policy.min_width || ti.height < policy.min_height) continue;
    if (ti.nodata_fraction > policy.max_nodata_fraction) continue;
    TexturedFace kept = f;
    kept.image_width = ti.width;
    kept.image_height = ti.height;
    out.faces.push_back(std::move(kept));
  }
  return out;
}

}  // namespace facadeloc
