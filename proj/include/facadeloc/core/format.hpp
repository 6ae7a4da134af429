#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

namespace facadeloc {

// Shortest-independent fixed formatting: 6 significant digits, locale-free,
// identical across platforms. Non-finite values print as inf / -inf / nan.
inline std::string format_g6(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) x = 0.0;  // drop negative zero
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 6);
  return std::string(buf.data(), res.ptr);
}

// JSON has no infinity; non-finite numbers are stored as null.
inline nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

inline double number_or_inf(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace facadeloc
