#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <png.h>

#include "facadeloc/core/errors.hpp"

namespace facadeloc {

// 8-bit interleaved raster, 1 to 4 channels (gray, gray+alpha, RGB, RGBA).
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 1, std::uint8_t fill = 0)
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 1 || channels > 4) {
      throw ValidationError("invalid image shape");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  bool has_alpha() const { return channels_ == 2 || channels_ == 4; }

  std::uint8_t& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  // Gray value with edge clamping; only meaningful for single-channel images.
  std::uint8_t clamped(int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return at(x, y);
  }

  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<std::uint8_t> data_;
};

inline Image read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot read PNG " + path.string() + ": " + msg);
  }
  const bool alpha = (img.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  int channels;
  if (color) {
    img.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    channels = alpha ? 4 : 3;
  } else {
    img.format = alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY;
    channels = alpha ? 2 : 1;
  }
  Image out(static_cast<int>(img.width), static_cast<int>(img.height), channels);
  if (!png_image_finish_read(&img, nullptr, out.data().data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

inline void write_png(const std::filesystem::path& path, const Image& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  switch (image.channels()) {
    case 1: img.format = PNG_FORMAT_GRAY; break;
    case 2: img.format = PNG_FORMAT_GA; break;
    case 3: img.format = PNG_FORMAT_RGB; break;
    default: img.format = PNG_FORMAT_RGBA; break;
  }
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, image.data().data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot write PNG " + path.string() + ": " + msg);
  }
}

inline Image to_gray(const Image& src) {
  if (src.channels() == 1) return src;
  Image out(src.width(), src.height(), 1);
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      if (src.channels() <= 2) {
        out.at(x, y) = src.at(x, y, 0);
      } else {
        // integer BT.601 weights, rounded
        const int v = 299 * src.at(x, y, 0) + 587 * src.at(x, y, 1) + 114 * src.at(x, y, 2);
        out.at(x, y) = static_cast<std::uint8_t>((v + 500) / 1000);
      }
    }
  }
  return out;
}

// Fraction of "no-data" pixels: fully transparent when there is an alpha
// channel, exact black otherwise.
inline double nodata_fraction(const Image& img) {
  if (img.empty()) return 1.0;
  std::size_t count = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      bool nodata;
      if (img.has_alpha()) {
        nodata = img.at(x, y, img.channels() - 1) == 0;
      } else {
        nodata = true;
        for (int c = 0; c < img.channels(); ++c) nodata = nodata && img.at(x, y, c) == 0;
      }
      count += nodata ? 1 : 0;
    }
  }
  return static_cast<double>(count) / (static_cast<double>(img.width()) * img.height());
}

// Bilinear sample of a gray image at pixel-index coordinates (pixel centers on
// integers), clamped at the border.
inline double sample_bilinear(const Image& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double ax = x - x0;
  const double ay = y - y0;
  const double p00 = img.clamped(x0, y0);
  const double p10 = img.clamped(x0 + 1, y0);
  const double p01 = img.clamped(x0, y0 + 1);
  const double p11 = img.clamped(x0 + 1, y0 + 1);
  return (1 - ay) * ((1 - ax) * p00 + ax * p10) + ay * ((1 - ax) * p01 + ax * p11);
}

inline std::uint8_t saturate_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Bilinear resize of a gray image. The mapping is center-aligned with the
// exact per-axis ratio, so it commutes with flips and 90 degree rotations.
inline Image resize_bilinear(const Image& src, int new_width, int new_height) {
  if (new_width <= 0 || new_height <= 0) throw ValidationError("resize to empty image");
  Image out(new_width, new_height, 1);
  const double sx = static_cast<double>(src.width()) / new_width;
  const double sy = static_cast<double>(src.height()) / new_height;
  for (int y = 0; y < new_height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < new_width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      out.at(x, y) = saturate_u8(sample_bilinear(src, fx, fy));
    }
  }
  return out;
}

struct Resized {
  Image image;
  double scale_x = 1.0;  // original pixels per resized pixel
  double scale_y = 1.0;
};

// Scales so that the longer side equals `long_edge`. Images already at that
// size are returned untouched.
inline Resized resize_long_edge(const Image& src, int long_edge) {
  const int longest = std::max(src.width(), src.height());
  if (long_edge <= 0) throw ValidationError("resize_long_edge must be positive");
  if (longest == long_edge) return {src, 1.0, 1.0};
  const double f = static_cast<double>(long_edge) / longest;
  const int w = std::max(1, static_cast<int>(std::lround(src.width() * f)));
  const int h = std::max(1, static_cast<int>(std::lround(src.height() * f)));
  return {resize_bilinear(src, w, h), static_cast<double>(src.width()) / w,
          static_cast<double>(src.height()) / h};
}

inline int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

// Separable Gaussian blur with reflect-101 borders.
inline Image gaussian_blur(const Image& src, double sigma, int ksize) {
  const int r = ksize / 2;
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;
  const int w = src.width();
  const int h = src.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * src.at(reflect101(x + i, w), y);
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) {
        acc += k[i + r] * tmp[static_cast<std::size_t>(reflect101(y + i, h)) * w + x];
      }
      out.at(x, y) = saturate_u8(acc);
    }
  }
  return out;
}

}  // namespace facadeloc
