#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "boltzkit/error.hpp"
#include "boltzkit/estimates.hpp"

namespace boltzkit {

/// Bumped whenever a transform, projector or kernel convention changes.
inline constexpr const char* convention_version = "boltzkit-conventions/1";

using Json = nlohmann::ordered_json;

/// Shortest decimal form with 17 significant digits.
inline std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline Json to_json(const EstimateReport& r, const std::map<std::string, std::string>& config = {}) {
  Json j;
  j["estimate_id"] = r.estimate_id;
  j["params"] = Json(r.params);
  Json lv = Json::array();
  for (auto [n, m] : r.levels) lv.push_back({n, m});
  j["levels"] = lv;
  j["ratios"] = r.ratios;
  j["fitted_slope"] = r.fitted_slope;
  j["theory_slope"] = r.theory_slope;
  j["slack"] = r.slack;
  j["verdict"] = r.pass ? "pass" : "fail";
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  if (!r.extra.empty()) j["extra"] = Json(r.extra);
  j["convention_version"] = convention_version;
  if (!config.empty()) j["config"] = Json(config);
  return j;
}

/// One row per level; side columns follow the ratio in key order.
inline std::string to_csv(const EstimateReport& r) {
  std::ostringstream os;
  os << "estimate_id,N,M,ratio";
  for (const auto& [k, v] : r.extra) os << ',' << csv_field(k);
  os << ",fitted_slope,theory_slope,verdict,samples,seed\r\n";
  for (std::size_t i = 0; i < r.ratios.size(); ++i) {
    os << csv_field(r.estimate_id) << ',' << fmt17(r.levels[i].first) << ',' << fmt17(r.levels[i].second) << ','
       << fmt17(r.ratios[i]);
    for (const auto& [k, v] : r.extra) os << ',' << (i < v.size() ? fmt17(v[i]) : "");
    os << ',' << fmt17(r.fitted_slope) << ',' << fmt17(r.theory_slope) << ',' << (r.pass ? "pass" : "fail") << ','
       << r.samples << ',' << r.seed << "\r\n";
  }
  return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot open output file " + path);
  out << text;
  if (!out) throw ConfigurationError("failed writing " + path);
}

}  // namespace boltzkit
