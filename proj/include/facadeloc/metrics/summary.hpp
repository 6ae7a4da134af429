#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facadeloc/core/errors.hpp"
#include "facadeloc/core/format.hpp"
#include "facadeloc/metrics/metrics.hpp"

namespace facadeloc {

struct PairResult {
  std::string pair_id;
  std::string method;
  std::vector<double> per_match_reproj_px;
  std::map<double, double> precision_at;  // threshold px -> ratio
  double rot_err_deg = kInf;
  double trans_err_m = kInf;   // t-space, against the centered ground truth
  double center_err_m = kInf;  // camera-center distance (diagnostic)
  std::size_t num_keypoints0 = 0;
  std::size_t num_keypoints1 = 0;
  std::size_t num_matches = 0;
  std::size_t num_inliers = 0;
  double mean_inlier_reproj_px = kInf;
  double runtime_s = 0.0;
  bool failure = true;
  std::string failure_reason;
};

struct MetricConfig {
  std::vector<double> precision_thresholds_px{3.0, 30.0};
  std::vector<double> auc_rotation_deg{3.0};
  std::vector<double> auc_translation_m{1.0};

  void validate() const {
    for (const auto* v : {&precision_thresholds_px, &auc_rotation_deg, &auc_translation_m}) {
      for (double t : *v) {
        if (!(t > 0)) throw ValidationError("metric thresholds must be positive");
      }
    }
  }
};

struct SummaryRow {
  std::string method;
  std::size_t num_pairs = 0;
  std::size_t num_failures = 0;
  std::map<double, double> mean_precision;  // threshold px -> mean over pairs
  std::map<double, double> auc_rotation;    // threshold deg -> AUC
  std::map<double, double> auc_translation; // threshold m -> AUC
  double mAA = 0.0;
  double mean_inliers = 0.0;
  double mean_inlier_pct = 0.0;
  double median_rot_err_deg = kInf;
  double median_trans_err_m = kInf;
  double mean_keypoints = 0.0;
  double mean_matches = 0.0;
  double mean_runtime_s = 0.0;
};

using SummaryTable = std::vector<SummaryRow>;

// Folds the pairs of one method into a table row. Means run over all pairs;
// failed pairs contribute infinite pose errors and zero precision/inliers.
inline SummaryRow aggregate_method(const std::vector<PairResult>& results, const MetricConfig& cfg,
                                   const std::string& method) {
  if (results.empty()) throw ValidationError("aggregate: no pair results");
  SummaryRow row;
  row.method = method;
  row.num_pairs = results.size();
  const double n = static_cast<double>(results.size());
  std::vector<double> rot, trans;
  for (const auto& r : results) {
    row.num_failures += r.failure ? 1 : 0;
    for (double t : cfg.precision_thresholds_px) {
      double p = 0.0;
      if (!r.failure) {
        auto it = r.precision_at.find(t);
        p = it != r.precision_at.end() ? it->second : precision_at(r.per_match_reproj_px, t);
      }
      row.mean_precision[t] += p / n;
    }
    rot.push_back(r.failure ? kInf : r.rot_err_deg);
    trans.push_back(r.failure ? kInf : r.trans_err_m);
    const double inl = r.failure ? 0.0 : static_cast<double>(r.num_inliers);
    row.mean_inliers += inl / n;
    row.mean_inlier_pct += (r.num_matches > 0 ? inl / static_cast<double>(r.num_matches) : 0.0) / n;
    row.mean_keypoints += 0.5 * static_cast<double>(r.num_keypoints0 + r.num_keypoints1) / n;
    row.mean_matches += static_cast<double>(r.num_matches) / n;
    row.mean_runtime_s += r.runtime_s / n;
  }
  std::vector<double> aucs;
  for (double t : cfg.auc_rotation_deg) {
    row.auc_rotation[t] = auc(rot, t);
    aucs.push_back(row.auc_rotation[t]);
  }
  for (double t : cfg.auc_translation_m) {
    row.auc_translation[t] = auc(trans, t);
    aucs.push_back(row.auc_translation[t]);
  }
  row.mAA = aucs.empty() ? 0.0 : mean_average_accuracy(aucs);
  row.median_rot_err_deg = median(rot);
  row.median_trans_err_m = median(trans);
  return row;
}

// One row per method, ordered by method name.
inline SummaryTable aggregate(const std::vector<PairResult>& results, const MetricConfig& cfg) {
  if (results.empty()) throw ValidationError("aggregate: no pair results");
  std::map<std::string, std::vector<PairResult>> by_method;
  for (const auto& r : results) by_method[r.method].push_back(r);
  SummaryTable table;
  for (const auto& [m, rs] : by_method) table.push_back(aggregate_method(rs, cfg, m));
  return table;
}

// ---- serialization ----------------------------------------------------------

inline std::string threshold_key(double t) { return format_g6(t); }

inline nlohmann::json pair_result_to_json(const PairResult& r) {
  nlohmann::json errs = nlohmann::json::array();
  for (double e : r.per_match_reproj_px) errs.push_back(finite_or_null(e));
  nlohmann::json prec = nlohmann::json::array();
  for (const auto& [t, p] : r.precision_at) prec.push_back({t, p});
  return {{"pair_id", r.pair_id},
          {"method", r.method},
          {"failure", r.failure},
          {"failure_reason", r.failure_reason},
          {"rot_err_deg", finite_or_null(r.rot_err_deg)},
          {"trans_err_m", finite_or_null(r.trans_err_m)},
          {"center_err_m", finite_or_null(r.center_err_m)},
          {"num_keypoints0", r.num_keypoints0},
          {"num_keypoints1", r.num_keypoints1},
          {"num_matches", r.num_matches},
          {"num_inliers", r.num_inliers},
          {"mean_inlier_reproj_px", finite_or_null(r.mean_inlier_reproj_px)},
          {"runtime_s", r.runtime_s},
          {"precision_at", prec},
          {"per_match_reproj_px", errs}};
}

inline PairResult pair_result_from_json(const nlohmann::json& j) {
  try {
    PairResult r;
    r.pair_id = j.at("pair_id").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.failure = j.at("failure").get<bool>();
    r.failure_reason = j.value("failure_reason", "");
    r.rot_err_deg = number_or_inf(j.at("rot_err_deg"));
    r.trans_err_m = number_or_inf(j.at("trans_err_m"));
    r.center_err_m = number_or_inf(j.value("center_err_m", nlohmann::json(nullptr)));
    r.num_keypoints0 = j.at("num_keypoints0").get<std::size_t>();
    r.num_keypoints1 = j.at("num_keypoints1").get<std::size_t>();
    r.num_matches = j.at("num_matches").get<std::size_t>();
    r.num_inliers = j.at("num_inliers").get<std::size_t>();
    r.mean_inlier_reproj_px = number_or_inf(j.value("mean_inlier_reproj_px", nlohmann::json(nullptr)));
    r.runtime_s = j.value("runtime_s", 0.0);
    for (const auto& e : j.at("precision_at")) r.precision_at[e.at(0).get<double>()] = e.at(1).get<double>();
    for (const auto& e : j.at("per_match_reproj_px")) r.per_match_reproj_px.push_back(number_or_inf(e));
    if (r.num_inliers > r.num_matches) throw ValidationError("pair " + r.pair_id + ": more inliers than matches");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pair result: ") + e.what());
  }
}

inline nlohmann::json summary_row_to_json(const SummaryRow& row) {
  auto as_list = [](const std::map<double, double>& m) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [t, v] : m) a.push_back({t, v});
    return a;
  };
  return {{"method", row.method},
          {"num_pairs", row.num_pairs},
          {"num_failures", row.num_failures},
          {"mean_precision", as_list(row.mean_precision)},
          {"auc_rotation_deg", as_list(row.auc_rotation)},
          {"auc_translation_m", as_list(row.auc_translation)},
          {"mAA", row.mAA},
          {"mean_inliers", row.mean_inliers},
          {"mean_inlier_pct", row.mean_inlier_pct},
          {"median_rot_err_deg", finite_or_null(row.median_rot_err_deg)},
          {"median_trans_err_m", finite_or_null(row.median_trans_err_m)},
          {"mean_keypoints", row.mean_keypoints},
          {"mean_matches", row.mean_matches},
          {"mean_runtime_s", row.mean_runtime_s},
          {"failure_accounting", "means over all pairs; failed pairs count as infinite error and zero inliers"}};
}

// CSV with one row per method. Columns:
// method, mPrec@<t>px..., AUC@<t>deg..., AUC@<t>m..., mAA, mInl, mInlPct,
// medErr (median rotation error, deg), mKpts, mMatches, time_s_per_pair.
inline std::string summary_to_csv(const SummaryTable& table, const MetricConfig& cfg) {
  std::string out = "method";
  for (double t : cfg.precision_thresholds_px) out += ",mPrec@" + threshold_key(t) + "px";
  for (double t : cfg.auc_rotation_deg) out += ",AUC@" + threshold_key(t) + "deg";
  for (double t : cfg.auc_translation_m) out += ",AUC@" + threshold_key(t) + "m";
  out += ",mAA,mInl,mInlPct,medErr,mKpts,mMatches,time_s_per_pair\n";
  std::vector<const SummaryRow*> rows;
  for (const auto& r : table) rows.push_back(&r);
  std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->method < b->method; });
  auto lookup = [](const std::map<double, double>& m, double t) {
    auto it = m.find(t);
    return it == m.end() ? 0.0 : it->second;
  };
  for (const auto* r : rows) {
    out += r->method;
    for (double t : cfg.precision_thresholds_px) out += "," + format_g6(lookup(r->mean_precision, t));
    for (double t : cfg.auc_rotation_deg) out += "," + format_g6(lookup(r->auc_rotation, t));
    for (double t : cfg.auc_translation_m) out += "," + format_g6(lookup(r->auc_translation, t));
    out += "," + format_g6(r->mAA) + "," + format_g6(r->mean_inliers) + "," + format_g6(r->mean_inlier_pct) + "," +
           format_g6(r->median_rot_err_deg) + "," + format_g6(r->mean_keypoints) + "," +
           format_g6(r->mean_matches) + "," + format_g6(r->mean_runtime_s) + "\n";
  }
  return out;
}

}  // namespace facadeloc
