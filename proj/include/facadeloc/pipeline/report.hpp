#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facadeloc/core/errors.hpp"
#include "facadeloc/core/format.hpp"
#include "facadeloc/core/io.hpp"
#include "facadeloc/metrics/summary.hpp"
#include "facadeloc/pipeline/config.hpp"
#include "facadeloc/pipeline/evaluate.hpp"

namespace facadeloc {

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) pairs.push_back(pair_result_to_json(p));
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& row : r.summary) summary.push_back(summary_row_to_json(row));
  return {{"schema", "report/1"},
          {"provenance", r.provenance},
          {"config", config_to_json(r.config)},
          {"warnings", r.warnings},
          {"summary", summary},
          {"pairs", pairs}};
}

// The per-pair records are the source of truth; the summary is recomputed.
inline RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  try {
    if (j.at("schema").get<std::string>() != "report/1") throw ValidationError("report: unsupported schema");
    apply_config_json(r.config, j.at("config"));
    r.provenance = j.value("provenance", nlohmann::json::object());
    if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& p : j.at("pairs")) r.pairs.push_back(pair_result_from_json(p));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("report: ") + e.what());
  }
  if (!r.pairs.empty()) r.summary = aggregate(r.pairs, r.config.metrics);
  return r;
}

namespace svg_detail {

struct Curve {
  std::string label;
  std::vector<double> errors;
};

inline const char* color(std::size_t i) {
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                            "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  return kColors[i % 8];
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Recall step curves on [0, x_max] with dashed gridlines at each threshold.
inline std::string error_recall_svg(const std::string& title, const std::string& unit,
                                    const std::vector<Curve>& curves, const std::vector<double>& thresholds) {
  const double x_max = thresholds.empty() ? 1.0 : *std::max_element(thresholds.begin(), thresholds.end());
  const double W = 480, H = 320, L = 56, R = 150, T = 30, B = 44;
  const double pw = W - L - R, ph = H - T - B;
  auto X = [&](double e) { return format_g6(L + pw * std::clamp(e / x_max, 0.0, 1.0)); };
  auto Y = [&](double r) { return format_g6(T + ph * (1.0 - r)); };
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_g6(W) + "\" height=\"" + format_g6(H) +
       "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + format_g6(L) + "\" y=\"18\" font-size=\"13\">" + escape(title) + "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double r = i / 4.0;
    s += "<line x1=\"" + X(0) + "\" y1=\"" + Y(r) + "\" x2=\"" + X(x_max) + "\" y2=\"" + Y(r) +
         "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + format_g6(L - 6) + "\" y=\"" + Y(r) + "\" text-anchor=\"end\" dy=\"4\">" + format_g6(r) +
         "</text>\n";
  }
  for (double t : thresholds) {
    s += "<line x1=\"" + X(t) + "\" y1=\"" + Y(0) + "\" x2=\"" + X(t) + "\" y2=\"" + Y(1) +
         "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    s += "<text x=\"" + X(t) + "\" y=\"" + format_g6(H - B + 16) + "\" text-anchor=\"middle\">" + format_g6(t) +
         "</text>\n";
  }
  s += "<text x=\"" + format_g6(L + pw / 2) + "\" y=\"" + format_g6(H - 8) + "\" text-anchor=\"middle\">error [" +
       escape(unit) + "]</text>\n";
  s += "<text x=\"14\" y=\"" + format_g6(T + ph / 2) + "\" transform=\"rotate(-90 14 " + format_g6(T + ph / 2) +
       ")\" text-anchor=\"middle\">recall</text>\n";
  s += "<rect x=\"" + format_g6(L) + "\" y=\"" + format_g6(T) + "\" width=\"" + format_g6(pw) + "\" height=\"" +
       format_g6(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    std::vector<double> e = curves[c].errors;
    std::sort(e.begin(), e.end());
    const double n = static_cast<double>(e.size());
    std::string pts = X(0) + "," + Y(0);
    double recall = 0;
    for (std::size_t i = 0; i < e.size() && e[i] <= x_max; ++i) {
      pts += " " + X(e[i]) + "," + Y(recall);
      recall = static_cast<double>(i + 1) / n;
      pts += " " + X(e[i]) + "," + Y(recall);
    }
    pts += " " + X(x_max) + "," + Y(recall);
    s += "<polyline fill=\"none\" stroke-width=\"1.8\" stroke=\"" + std::string(color(c)) + "\" points=\"" + pts +
         "\"/>\n";
    const std::string ly = format_g6(T + 14 + 16.0 * static_cast<double>(c));
    s += "<line x1=\"" + format_g6(W - R + 10) + "\" y1=\"" + ly + "\" x2=\"" + format_g6(W - R + 30) + "\" y2=\"" +
         ly + "\" stroke=\"" + color(c) + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + format_g6(W - R + 36) + "\" y=\"" + ly + "\" dy=\"4\">" + escape(curves[c].label) +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace svg_detail

struct ReportFormats {
  bool json = true;
  bool csv = true;
  bool svg = true;
};

inline std::map<std::string, std::string> render_report(const RunReport& r, const ReportFormats& formats = {}) {
  std::map<std::string, std::string> files;
  if (formats.json) files["report.json"] = report_to_json(r).dump(2) + "\n";
  if (formats.csv) files["summary.csv"] = summary_to_csv(r.summary, r.config.metrics);
  if (formats.svg) {
    std::map<std::string, svg_detail::Curve> rot, trans;
    for (const auto& p : r.pairs) {
      rot[p.method].label = p.method;
      rot[p.method].errors.push_back(p.failure ? kInf : p.rot_err_deg);
      trans[p.method].label = p.method;
      trans[p.method].errors.push_back(p.failure ? kInf : p.trans_err_m);
    }
    auto values = [](const std::map<std::string, svg_detail::Curve>& m) {
      std::vector<svg_detail::Curve> v;
      for (const auto& [k, c] : m) v.push_back(c);
      return v;
    };
    files["recall_rotation.svg"] =
        svg_detail::error_recall_svg("Rotation error", "deg", values(rot), r.config.metrics.auc_rotation_deg);
    files["recall_translation.svg"] =
        svg_detail::error_recall_svg("Translation error", "m", values(trans), r.config.metrics.auc_translation_m);
  }
  return files;
}

// All files are written to temporaries first, then renamed; an unwritable
// directory fails before anything lands.
inline std::vector<std::filesystem::path> emit_report(const RunReport& r, const std::filesystem::path& out_dir,
                                                      const ReportFormats& formats = {}) {
  AtomicWriter w;
  std::vector<std::filesystem::path> written;
  for (auto& [name, contents] : render_report(r, formats)) {
    w.add(out_dir / name, contents);
    written.push_back(out_dir / name);
  }
  w.commit();
  return written;
}

}  // namespace facadeloc
