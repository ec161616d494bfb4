#ifndef CHROMAMIX_REPORT_HPP_
#define CHROMAMIX_REPORT_HPP_

// File formats: training CSV, metrics/transfer/reachability JSON, and the
// table-shaped CSVs.

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chromamix/config.hpp"
#include "chromamix/metrics.hpp"
#include "chromamix/ppo.hpp"
#include "chromamix/reachability.hpp"

namespace chromamix {

using Json = nlohmann::ordered_json;

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Training curve CSV: "step,ep_rew_mean"

inline constexpr const char* kCurveHeader = "step,ep_rew_mean";

inline std::string curve_csv_row(const CurvePoint& p) {
  return std::to_string(p.step) + "," + format_double(p.ep_rew_mean) + "\n";
}

inline std::string format_curve_csv(const TrainingCurve& curve) {
  std::string s = std::string(kCurveHeader) + "\n";
  for (const auto& p : curve) s += curve_csv_row(p);
  return s;
}

inline TrainingCurve parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kCurveHeader) {
    throw std::runtime_error(std::string("training CSV must start with '") + kCurveHeader + "'");
  }
  TrainingCurve curve;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto parts = detail::split(line, ',');
    if (parts.size() != 2) throw std::runtime_error("malformed training CSV row: '" + line + "'");
    curve.push_back({detail::parse_number<long long>("step", parts[0]),
                     detail::parse_number<double>("ep_rew_mean", parts[1])});
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Metrics JSON: keys fp, t75, cv, nm, cs

inline Json metrics_json(const CurveMetrics& m, std::optional<double> cs = std::nullopt) {
  Json j;
  j["fp"] = m.fp;
  j["t75"] = m.t75 ? Json(*m.t75) : Json(nullptr);
  j["cv"] = m.cv;
  j["nm"] = m.nm;
  j["cs"] = cs ? Json(*cs) : Json(nullptr);
  j["cv_negative_mean"] = m.cv_negative_mean;
  return j;
}

inline CurveMetrics metrics_from_json(const Json& j) {
  CurveMetrics m;
  m.fp = j.at("fp").get<double>();
  if (!j.at("t75").is_null()) m.t75 = j.at("t75").get<long long>();
  m.cv = j.at("cv").get<double>();
  m.nm = j.at("nm").get<double>();
  m.cv_negative_mean = j.value("cv_negative_mean", false);
  return m;
}

// ---------------------------------------------------------------------------
// Transfer reports

inline Json rgb_json(const Rgb& c) { return Json::array({c.r, c.g, c.b}); }

inline Json transfer_stats_json(const TransferStats& s, bool with_target) {
  Json j;
  j["name"] = s.name;
  if (with_target) j["target"] = rgb_json(s.target);
  j["episodes"] = s.episodes;
  j["d_mean"] = s.d_mean;
  j["d_std"] = s.d_std;
  j["s_mean"] = s.s_mean;
  j["success_rate"] = s.success_rate;
  return j;
}

inline Json transfer_json(const TransferReport& r) {
  Json j;
  j["train_dynamics"] = to_string(r.train_dynamics);
  j["eval_dynamics"] = to_string(r.eval_dynamics);
  j["horizon"] = r.horizon;
  j["tolerance"] = r.tolerance;
  j["targets"] = Json::array();
  for (const auto& s : r.per_target) j["targets"].push_back(transfer_stats_json(s, true));
  j["avg"] = transfer_stats_json(r.overall, false);
  return j;
}

/// One row per target plus "Avg", like the hardware results table.
inline std::string transfer_csv(const TransferReport& r) {
  std::string s = "target,d_mean,d_std,s_mean,success_pct\n";
  auto row = [&s](const TransferStats& t) {
    s += t.name + "," + format_double(t.d_mean) + "," + format_double(t.d_std) + "," + format_double(t.s_mean) +
         "," + format_double(100.0 * t.success_rate) + "\n";
  };
  for (const auto& t : r.per_target) row(t);
  row(r.overall);
  return s;
}

// ---------------------------------------------------------------------------
// Reachability

inline Json reachability_json(const std::vector<ReachabilityEntry>& entries, const std::vector<NamedTarget>& targets,
                              double resolution) {
  Json j;
  j["resolution"] = resolution;
  j["mode"] = entries.empty() ? "closest" : to_string(entries.front().mode);
  j["entries"] = Json::array();
  for (const auto& e : entries) {
    Json row;
    std::string name;
    for (const auto& t : targets) {
      if (t.color == e.target) name = t.name;
    }
    row["target"] = name;
    row["rgb"] = rgb_json(e.target);
    row["model"] = to_string(e.model);
    row["tau_min"] = e.tau_min;
    row["distance"] = rgb_distance(e.closest, e.target);
    row["weights"] = Json::array({e.weights[0], e.weights[1], e.weights[2]});
    row["closest"] = rgb_json(e.closest);
    j["entries"].push_back(row);
  }
  return j;
}

/// Rows are targets, columns are models (tau_min to one decimal).
inline std::string reachability_csv(const std::vector<ReachabilityEntry>& entries,
                                    const std::vector<NamedTarget>& targets,
                                    const std::vector<DynamicsModel>& models) {
  std::string s = "target";
  for (auto m : models) s += "," + to_string(m);
  s += "\n";
  for (std::size_t t = 0; t < targets.size(); ++t) {
    s += targets[t].name;
    for (std::size_t m = 0; m < models.size(); ++m) {
      const auto& e = entries.at(t * models.size() + m);
      std::ostringstream v;
      v.setf(std::ios::fixed);
      v.precision(1);
      v << e.tau_min;
      s += "," + v.str();
    }
    s += "\n";
  }
  return s;
}

}  // namespace chromamix

#endif  // CHROMAMIX_REPORT_HPP_
