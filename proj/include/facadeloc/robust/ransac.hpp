#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "facadeloc/core/errors.hpp"
#include "facadeloc/core/rng.hpp"

namespace facadeloc {

struct RansacConfig {
  double threshold = 10.0;  // px
  double confidence = 0.9999;
  int max_iterations = 10000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(threshold > 0)) throw ValidationError("ransac.threshold must be > 0");
    if (!(confidence > 0 && confidence < 1)) throw ValidationError("ransac.confidence must lie in (0, 1)");
    if (max_iterations < 1) throw ValidationError("ransac.max_iterations must be >= 1");
  }
};

// The single inlier predicate shared by estimation and reporting.
inline bool is_inlier(double error_px, double threshold_px) { return error_px < threshold_px; }

// Iterations needed to draw one all-inlier sample of `sample_size` points
// with the given confidence, for inlier ratio w.
inline int adaptive_iterations(double w, int sample_size, double confidence, int cap) {
  if (w <= 0) return cap;
  const double p = std::pow(w, sample_size);
  if (p >= 1.0) return 1;
  const double n = std::log(1.0 - confidence) / std::log(1.0 - p);
  if (!std::isfinite(n) || n >= cap) return cap;
  return std::max(1, static_cast<int>(std::ceil(n)));
}

template <typename Model>
struct RansacResult {
  std::optional<Model> model;
  std::vector<bool> inliers;
  std::size_t num_inliers = 0;
  double inlier_sq_sum = 0.0;
  int iterations = 0;
};

// Plain hypothesize-and-verify RANSAC.
//   fit(std::span<const std::size_t> sample) -> std::optional<Model>
//   error(const Model&, std::size_t i) -> double (px; +inf when undefined)
// Samples are drawn without replacement. The best model is the one with most
// inliers, then lowest inlier squared error, then earliest iteration. The
// iteration budget adapts to the best inlier ratio using `ratio_exponent`
// (the number of points that must all be inliers for a good hypothesis).
template <typename Model, typename FitFn, typename ErrorFn>
RansacResult<Model> ransac(std::size_t n, std::size_t sample_size, int ratio_exponent, const RansacConfig& cfg,
                           FitFn&& fit, ErrorFn&& error) {
  cfg.validate();
  RansacResult<Model> best;
  best.inliers.assign(n, false);
  if (n < sample_size) return best;
  Rng rng(cfg.seed);
  std::vector<std::size_t> sample(sample_size);
  std::vector<bool> mask(n);
  int needed = cfg.max_iterations;
  int it = 0;
  for (; it < needed; ++it) {
    for (std::size_t k = 0; k < sample_size; ++k) {
      bool fresh;
      do {
        sample[k] = static_cast<std::size_t>(rng.below(n));
        fresh = true;
        for (std::size_t q = 0; q < k; ++q) fresh = fresh && sample[q] != sample[k];
      } while (!fresh);
    }
    std::optional<Model> model = fit(std::span<const std::size_t>(sample));
    if (!model) continue;
    std::size_t count = 0;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = error(*model, i);
      mask[i] = is_inlier(e, cfg.threshold);
      if (mask[i]) {
        ++count;
        sq += e * e;
      }
    }
    const bool better = count > best.num_inliers || (count == best.num_inliers && count > 0 && sq < best.inlier_sq_sum);
    if (better) {
      best.model = std::move(model);
      best.inliers = mask;
      best.num_inliers = count;
      best.inlier_sq_sum = sq;
      needed = std::min(needed, adaptive_iterations(static_cast<double>(count) / n, ratio_exponent,
                                                    cfg.confidence, cfg.max_iterations));
    }
  }
  best.iterations = it;
  return best;
}

}  // namespace facadeloc
