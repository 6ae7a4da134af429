#pragma once

#include <array>
#include <bit>
#include <cstdint>

namespace facadeloc {

// Detected feature in continuous original-resolution pixels.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double response = 0.0;
  double angle = 0.0;  // radians, image axes (x right, y down)
  int scale_level = 0;
};

// 256-bit binary descriptor.
struct BinaryDescriptor {
  std::array<std::uint64_t, 4> bits{};

  bool bit(int i) const { return (bits[i >> 6] >> (i & 63)) & 1U; }
  void set(int i) { bits[i >> 6] |= std::uint64_t{1} << (i & 63); }

  friend bool operator==(const BinaryDescriptor&, const BinaryDescriptor&) = default;
};

inline int hamming_distance(const BinaryDescriptor& a, const BinaryDescriptor& b) {
  int d = 0;
  for (int i = 0; i < 4; ++i) d += std::popcount(a.bits[i] ^ b.bits[i]);
  return d;
}

}  // namespace facadeloc
