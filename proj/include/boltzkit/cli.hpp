#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "boltzkit/annihilation.hpp"
#include "boltzkit/estimates.hpp"
#include "boltzkit/hierarchy.hpp"
#include "boltzkit/parallel.hpp"
#include "boltzkit/report.hpp"
#include "boltzkit/solver.hpp"

namespace boltzkit {

// ------------------------------------------------------------------ config

enum class KeyType { Int, Real, Bool, List, Choice, Text };

struct KeySpec {
  std::string name;
  KeyType type = KeyType::Real;
  std::optional<std::string> fallback;  // empty means the key is required
  std::vector<std::string> choices{};
};

namespace detail {

inline std::vector<KeySpec> grid_keys(const char* d, const char* nx, const char* nv, const char* vmax) {
  return {{"d", KeyType::Int, d}, {"nx", KeyType::Int, nx}, {"nv", KeyType::Int, nv}, {"v_max", KeyType::Real, vmax}};
}

inline std::vector<KeySpec> kernel_keys() {
  return {{"gamma", KeyType::Real, "0"},
          {"angular", KeyType::Choice, "abscos", {"abscos", "cos2"}},
          {"n_sphere", KeyType::Int, "64"}};
}

inline void append(std::vector<KeySpec>& a, const std::vector<KeySpec>& b) { a.insert(a.end(), b.begin(), b.end()); }

}  // namespace detail

/// Keys each command accepts, with defaults. `seed` is accepted everywhere.
inline const std::map<std::string, std::vector<KeySpec>>& command_schema() {
  static const auto schema = [] {
    using detail::append;
    std::map<std::string, std::vector<KeySpec>> s;
    s["strichartz"] = {{"d", KeyType::Int, "2"},          {"p", KeyType::Real, "4"},
                       {"M", KeyType::Real, "1"},         {"levels", KeyType::List, "4,8,16,32"},
                       {"T", KeyType::Real, "1"},         {"samples", KeyType::Int, "64"},
                       {"time_samples", KeyType::Int, "33"}, {"nv", KeyType::Int, "16"},
                       {"slack", KeyType::Real, "0.1"},   {"probe", KeyType::Bool, "true"},
                       {"sensitivity", KeyType::Bool, "false"}};
    s["bilinear"] = {{"d", KeyType::Int, "2"},          {"nx", KeyType::Int, "4"},
                     {"v_max", KeyType::Real, "5"},     {"nv_levels", KeyType::List, "16,32"},
                     {"s", KeyType::Real, "0.8"},       {"s1", KeyType::List, "0"},
                     {"r", KeyType::Real, "1.3"},       {"T", KeyType::Real, "1"},
                     {"samples", KeyType::Int, "64"},   {"time_nodes", KeyType::Int, "4"},
                     {"modes", KeyType::Int, "2"},      {"factor", KeyType::Real, "2"}};
    append(s["bilinear"], detail::kernel_keys());
    s["annihilation"] = detail::grid_keys("2", "4", "16", "16");
    append(s["annihilation"], detail::kernel_keys());
    append(s["annihilation"], {{"profile", KeyType::Choice, "sharp", {"sharp", "smooth"}},
                               {"amplitude", KeyType::Real, "0.3"},
                               {"scope", KeyType::Choice, "condition", {"condition", "all"}}});
    s["boardgame"] = {{"k", KeyType::Int, std::nullopt},
                      {"identity", KeyType::Bool, "false"},
                      {"t1", KeyType::Real, "0.5"},
                      {"n_simplex", KeyType::Int, "200"},
                      {"n_domain", KeyType::Int, "1000"},
                      {"amplitude", KeyType::Real, "0.3"}};
    append(s["boardgame"], detail::grid_keys("2", "4", "8", "4"));
    append(s["boardgame"], detail::kernel_keys());
    s["duhamel"] = {{"mode", KeyType::Choice, "reconstruction", {"reconstruction", "contraction"}},
                    {"depths", KeyType::List, "2,3"},
                    {"t1", KeyType::Real, "0.2"},
                    {"nodes", KeyType::Int, "3"},
                    {"dt", KeyType::Real, "0.005"},
                    {"amplitude", KeyType::Real, "0.3"},
                    {"tolerance", KeyType::Real, "1e-3"},
                    {"k_max", KeyType::Int, "3"},
                    {"target_factor", KeyType::Real, "0.5"},
                    {"ratio_limit", KeyType::Real, "0.75"},
                    {"t1_samples", KeyType::Int, "2"},
                    {"identical", KeyType::Bool, "false"}};
    append(s["duhamel"], detail::grid_keys("2", "4", "8", "4"));
    append(s["duhamel"], detail::kernel_keys());
    s["uniqueness"] = {{"dt_a", KeyType::Real, "0.01"},
                       {"dt_b", KeyType::Real, "0.005"},
                       {"scheme_a", KeyType::Choice, "strang", {"strang", "lie"}},
                       {"scheme_b", KeyType::Choice, "strang", {"strang", "lie"}},
                       {"t_end", KeyType::Real, "0.1"},
                       {"times", KeyType::List, "0.05,0.1"},
                       {"amplitude", KeyType::Real, "0.3"},
                       {"s", KeyType::Real, "1"},
                       {"r", KeyType::Real, "1"}};
    append(s["uniqueness"], detail::grid_keys("2", "4", "8", "4"));
    append(s["uniqueness"], detail::kernel_keys());
    s["solve"] = {{"dt", KeyType::Real, "0.01"},
                  {"t_end", KeyType::Real, "0.1"},
                  {"scheme", KeyType::Choice, "strang", {"strang", "lie"}},
                  {"collisions", KeyType::Bool, "true"},
                  {"times", KeyType::List, "0,0.05,0.1"},
                  {"init", KeyType::Choice, "perturbed", {"maxwellian", "perturbed", "random"}},
                  {"eps", KeyType::Real, "0.1"},
                  {"amplitude", KeyType::Real, "0.3"}};
    append(s["solve"], detail::grid_keys("2", "4", "8", "4"));
    append(s["solve"], detail::kernel_keys());
    for (auto& [name, keys] : s) keys.push_back({"seed", KeyType::Int, "0"});
    return s;
  }();
  return schema;
}

struct ExperimentConfig {
  std::string command;
  std::map<std::string, std::string> params;  // every schema key, defaults filled
  std::uint64_t seed = 0;
  std::string out_path;

  const std::string& raw(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw ConfigurationError("no parameter " + key);
    return it->second;
  }
  double real(const std::string& key) const { return std::stod(raw(key)); }
  int integer(const std::string& key) const { return std::stoi(raw(key)); }
  bool flag(const std::string& key) const { return raw(key) == "true"; }
  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(raw(key));
    for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stod(item));
    return out;
  }

  /// Resolved configuration as embedded in reports.
  std::map<std::string, std::string> resolved() const {
    auto out = params;
    out["command"] = command;
    out["seed"] = std::to_string(seed);
    return out;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline bool parse_real(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = first + s.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last && std::isfinite(out);
}

inline bool parse_int(const std::string& s, long long& out) {
  const char* first = s.data();
  const char* last = first + s.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

/// Checks a value against its key type; returns the normalized text.
inline std::string normalize(const KeySpec& key, const std::string& value, int line) {
  auto bad = [&](const std::string& what) {
    return ParseError(line, "malformed " + what + " for " + key.name + ": '" + value + "'");
  };
  switch (key.type) {
    case KeyType::Int: {
      long long v = 0;
      if (!parse_int(value, v)) throw bad("integer");
      return std::to_string(v);
    }
    case KeyType::Real: {
      double v = 0;
      if (!parse_real(value, v)) throw bad("number");
      return value;
    }
    case KeyType::Bool:
      if (value == "true" || value == "1" || value == "yes") return "true";
      if (value == "false" || value == "0" || value == "no") return "false";
      throw bad("boolean");
    case KeyType::List: {
      std::stringstream ss(value);
      std::string out;
      for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        double v = 0;
        if (!parse_real(item, v)) throw bad("list");
        out += (out.empty() ? "" : ",") + item;
      }
      if (out.empty()) throw bad("list");
      return out;
    }
    case KeyType::Choice:
      if (std::find(key.choices.begin(), key.choices.end(), value) == key.choices.end()) throw bad("choice");
      return value;
    case KeyType::Text: return value;
  }
  return value;
}

}  // namespace detail

/// Line-based `key = value` text with `#` comments. The command comes from the
/// text or, when absent there, from `command`; the two must agree when both are given.
inline ExperimentConfig parse_config(const std::string& text, const std::string& command = "") {
  std::vector<std::tuple<int, std::string, std::string>> entries;
  std::string cmd;
  int cmd_line = 0;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (value.empty()) throw ParseError(line_no, "empty value for " + key);
    if (key == "command") {
      cmd = value, cmd_line = line_no;
      continue;
    }
    entries.emplace_back(line_no, key, value);
  }
  const auto& schema = command_schema();
  if (!command.empty() && !schema.count(command)) throw ParseError(0, "unknown command '" + command + "'");
  if (cmd.empty()) cmd = command;
  if (cmd.empty()) throw ParseError(line_no, "no command given");
  auto it = schema.find(cmd);
  if (it == schema.end()) throw ParseError(cmd_line, "unknown command '" + cmd + "'");
  if (!command.empty() && command != cmd)
    throw ParseError(cmd_line, "config is for '" + cmd + "' but '" + command + "' was requested");

  ExperimentConfig cfg;
  cfg.command = cmd;
  std::map<std::string, int> seen;
  for (const auto& [ln, key, value] : entries) {
    auto spec = std::find_if(it->second.begin(), it->second.end(), [&](const KeySpec& k) { return k.name == key; });
    if (spec == it->second.end()) throw ParseError(ln, "unknown key '" + key + "' for " + cmd);
    if (seen.count(key)) throw ParseError(ln, "duplicate key '" + key + "' (first on line " + std::to_string(seen[key]) + ")");
    seen[key] = ln;
    cfg.params[key] = detail::normalize(*spec, value, ln);
  }
  for (const auto& key : it->second) {
    if (cfg.params.count(key.name)) continue;
    if (!key.fallback) throw ParseError(line_no, "missing required key '" + key.name + "'");
    cfg.params[key.name] = *key.fallback;
  }
  const long long seed = std::stoll(cfg.params["seed"]);
  if (seed < 0) throw ParseError(seen.count("seed") ? seen["seed"] : line_no, "seed must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.params.erase("seed");
  return cfg;
}

// --------------------------------------------------------------------- run

/// Everything one experiment produces. The JSON is deterministic; wall time
/// and thread count live in `metadata`, which is written to a separate file.
struct RunOutput {
  int exit_code = 0;
  std::string summary;
  Json json;
  std::string csv;
  Json metadata;
  std::vector<std::pair<std::string, std::string>> extra_files;  // suffix, binary contents
};

namespace detail {

inline SpectralGrid config_grid(const ExperimentConfig& c) {
  return make_grid(c.integer("d"), c.integer("nx"), c.integer("nv"), c.real("v_max"));
}

inline KernelSpec config_kernel(const ExperimentConfig& c) {
  KernelSpec k;
  k.gamma = c.real("gamma");
  k.angular = c.raw("angular") == "cos2" ? Angular::CosSquared : Angular::AbsCos;
  k.n_sphere = c.integer("n_sphere");
  return k;
}

inline Json base_json(const ExperimentConfig& c, const std::string& id, bool pass) {
  Json j;
  j["estimate_id"] = id;
  j["verdict"] = pass ? "pass" : "fail";
  j["seed"] = c.seed;
  return j;
}

inline void finish_json(Json& j, const ExperimentConfig& c) {
  j["convention_version"] = convention_version;
  j["config"] = Json(c.resolved());
}

inline std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_field(cells[i]);
  return out + "\r\n";
}

inline std::string verdict_word(bool pass) { return pass ? "pass" : "fail"; }

inline RunOutput run_strichartz(const ExperimentConfig& c) {
  StrichartzSweep s;
  s.d = c.integer("d");
  s.p = c.real("p");
  s.M = c.real("M");
  s.N = c.list("levels");
  s.T = c.real("T");
  s.samples = c.integer("samples");
  s.time_samples = c.integer("time_samples");
  s.nv = c.integer("nv");
  s.slack = c.real("slack");
  s.probe = c.flag("probe");
  s.sensitivity = c.flag("sensitivity");
  auto rep = strichartz_sweep(s, c.seed);
  RunOutput out;
  out.json = to_json(rep, c.resolved());
  out.json["convention_version"] = convention_version;
  out.csv = to_csv(rep);
  out.exit_code = rep.pass ? 0 : 1;
  out.summary = rep.estimate_id + " slope=" + fmt17(rep.fitted_slope) + " theory=" + fmt17(rep.theory_slope) +
                " slack=" + fmt17(rep.slack) + " " + verdict_word(rep.pass);
  return out;
}

inline RunOutput run_bilinear(const ExperimentConfig& c) {
  BilinearParams bp;
  bp.gamma = c.real("gamma");
  bp.s = c.real("s");
  const auto s1_values = c.list("s1");
  bp.s1 = s1_values.front();
  bp.r = c.real("r");
  bp.T = c.real("T");
  bp.samples = c.integer("samples");
  bp.time_nodes = c.integer("time_nodes");
  bp.modes = c.integer("modes");
  std::vector<SpectralGrid> grids;
  for (double nv : c.list("nv_levels"))
    grids.push_back(make_grid(c.integer("d"), c.integer("nx"), static_cast<int>(nv), c.real("v_max")));
  auto reps = bilinear_reports(grids, bp, c.seed, config_kernel(c), c.real("factor"), s1_values);
  RunOutput out;
  out.json = Json::object();
  out.json["reports"] = Json::array();
  bool pass = true;
  std::string csv;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    Json j = to_json(reps[i]);
    out.json["reports"].push_back(j);
    std::string part = to_csv(reps[i]);
    if (i > 0) part.erase(0, part.find("\r\n") + 2);  // one header
    csv += part;
    pass = pass && reps[i].pass;
    out.summary += (i ? "\n" : "") + reps[i].estimate_id + " s1=" + fmt17(reps[i].params.at("s1")) + " max/min=" +
                   fmt17(std::exp2(reps[i].fitted_slope)) + " factor=" + fmt17(reps[i].slack) + " " +
                   verdict_word(reps[i].pass);
  }
  out.json["verdict"] = verdict_word(pass);
  finish_json(out.json, c);
  out.csv = csv;
  out.exit_code = pass ? 0 : 1;
  return out;
}

inline std::vector<double> dyadic_levels(double top) {
  std::vector<double> out;
  for (double L = 1; L <= top * (1 + 1e-12); L *= 2) out.push_back(L);
  return out;
}

inline RunOutput run_annihilation(const ExperimentConfig& c) {
  const auto g = config_grid(c);
  const auto spec = config_kernel(c);
  const auto prof = c.raw("profile") == "smooth" ? LpProfile::Smooth : LpProfile::Sharp;
  auto f = transform(random_initial(g, c.seed, c.real("amplitude")), Repr::XXI);
  auto h = transform(random_initial(g, c.seed + 1, c.real("amplitude")), Repr::XXI);
  const auto levels = dyadic_levels(max_level(g, LpAxis::Xi));
  std::string csv = csv_line({"M", "M1", "M2", "ratio", "condition_met", "passed", "threshold"});
  Json rows = Json::array();
  bool pass = true;
  double worst = 0;
  int checked = 0;
  for (double M : levels)
    for (double M1 : levels)
      for (double M2 : levels) {
        if (c.raw("scope") == "condition" && M < 10 * std::max(M1, M2)) continue;
        auto r = check_annihilation(f, h, M, M1, M2, spec, prof);
        pass = pass && r.passed;
        if (r.condition_met) {
          worst = std::max(worst, r.ratio);
          ++checked;
        }
        rows.push_back({{"M", M}, {"M1", M1}, {"M2", M2}, {"ratio", r.ratio}, {"condition_met", r.condition_met},
                        {"passed", r.passed}});
        csv += csv_line({fmt17(M), fmt17(M1), fmt17(M2), fmt17(r.ratio), r.condition_met ? "true" : "false",
                         r.passed ? "true" : "false", fmt17(r.threshold)});
      }
  RunOutput out;
  out.json = base_json(c, "annihilation", pass);
  out.json["worst_ratio_when_condition_met"] = worst;
  out.json["triples_with_condition"] = checked;
  out.json["rows"] = rows;
  finish_json(out.json, c);
  out.csv = csv;
  out.exit_code = pass ? 0 : 1;
  out.summary = "annihilation triples=" + std::to_string(rows.size()) + " checked=" + std::to_string(checked) +
                " worst=" + fmt17(worst) + " " + verdict_word(pass);
  return out;
}

inline RunOutput run_boardgame(const ExperimentConfig& c) {
  const int k = c.integer("k");
  const double t1 = c.real("t1");
  const auto classes = km_classes(k);
  std::string csv = csv_line({"representative", "tree", "members", "exact_volume", "mc_volume", "mc_sigma"});
  Json rows = Json::array();
  long members = 0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& cls = classes[i];
    members += static_cast<long>(cls.members.size());
    const auto ds = time_domain_sample(cls, t1, std::max(1000, c.integer("n_domain")), c.seed + i);
    Json mem = Json::array();
    for (const auto& m : cls.members) mem.push_back(m.str());
    const auto tree = build_duhamel_tree(cls.representative).str();
    rows.push_back({{"representative", cls.representative.str()},
                    {"tree", tree},
                    {"members", mem},
                    {"exact_volume", ds.exact_volume},
                    {"mc_volume", ds.volume},
                    {"mc_sigma", ds.sigma}});
    csv += csv_line({cls.representative.str(), tree, std::to_string(cls.members.size()), fmt17(ds.exact_volume),
                     fmt17(ds.volume), fmt17(ds.sigma)});
  }
  bool pass = static_cast<long>(classes.size()) == catalan(k) && members == factorial(k);
  RunOutput out;
  out.json = base_json(c, "boardgame", pass);
  out.json["k"] = k;
  out.json["classes"] = classes.size();
  out.json["catalan"] = catalan(k);
  out.json["maps"] = members;
  out.json["rows"] = rows;
  if (c.flag("identity")) {
    const auto g = config_grid(c);
    auto f0 = random_initial(g, c.seed, c.real("amplitude"));
    auto ic = boardgame_identity(f0, k, t1, c.integer("n_simplex"), c.integer("n_domain"), c.seed,
                                 config_kernel(c));
    out.json["identity"] = {{"lhs", {ic.lhs_re, ic.lhs_im}},
                            {"rhs", {ic.rhs_re, ic.rhs_im}},
                            {"sigma", {ic.sigma_re, ic.sigma_im}},
                            {"within_3sigma", ic.within_3sigma()}};
    pass = pass && ic.within_3sigma();
    out.json["verdict"] = verdict_word(pass);
  }
  finish_json(out.json, c);
  out.csv = csv;
  out.exit_code = pass ? 0 : 1;
  out.summary = "boardgame k=" + std::to_string(k) + " classes=" + std::to_string(classes.size()) +
                " maps=" + std::to_string(members) + " " + verdict_word(pass);
  return out;
}

/// Presampled trajectory served as a StateAt.
inline StateAt state_of(const Trajectory& tr) {
  auto table = std::make_shared<std::map<double, PhaseField>>();
  for (std::size_t i = 0; i < tr.times.size(); ++i) table->emplace(tr.times[i], tr.fields[i]);
  return [table](double t) {
    auto it = table->find(t);
    if (it == table->end()) throw RangeError("state requested at an unsampled time " + fmt17(t));
    return it->second;
  };
}

inline RunOutput run_reconstruction(const ExperimentConfig& c) {
  const auto g = config_grid(c);
  const auto spec = config_kernel(c);
  const double t1 = c.real("t1"), tol = c.real("tolerance");
  const int n = c.integer("nodes");
  auto f0 = random_initial(g, c.seed, c.real("amplitude"));
  std::string csv = csv_line({"k", "relative_error", "reference_norm", "tolerance", "verdict"});
  Json rows = Json::array();
  bool pass = true;
  for (double kd : c.list("depths")) {
    const int k = static_cast<int>(kd);
    auto times = expansion_leaf_times(k, t1, n);
    times.push_back(t1);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    auto tr = reference_solve(f0, spec, c.real("dt"), times);
    auto state = state_of(tr);
    PhaseField lhs = duhamel_expansion(f0, state, k, t1, n, spec);
    PhaseField ref = transform(state(t1) - propagate(f0, t1), Repr::XXI);
    const double err = relative_l2_diff(lhs, ref);
    const bool ok = err < tol;
    pass = pass && ok;
    rows.push_back({{"k", k}, {"relative_error", err}, {"reference_norm", l2_norm(ref)}, {"verdict", verdict_word(ok)}});
    csv += csv_line({std::to_string(k), fmt17(err), fmt17(l2_norm(ref)), fmt17(tol), verdict_word(ok)});
  }
  RunOutput out;
  out.json = base_json(c, "duhamel-reconstruction", pass);
  out.json["rows"] = rows;
  finish_json(out.json, c);
  out.csv = csv;
  out.exit_code = pass ? 0 : 1;
  out.summary = "duhamel-reconstruction depths=" + c.raw("depths") + " " + verdict_word(pass);
  return out;
}

inline RunOutput run_contraction(const ExperimentConfig& c) {
  const auto g = config_grid(c);
  const auto spec = config_kernel(c);
  const int k_max = c.integer("k_max"), n = c.integer("nodes"), nt = c.integer("t1_samples");
  if (nt < 1) throw ConfigurationError("t1_samples must be positive");
  auto fa0 = random_initial(g, c.seed, c.real("amplitude"));
  auto other = random_initial(g, c.seed + 1, c.real("amplitude"));
  // Constants measured on the data, then T chosen so that 4 C C0 T^{1/2} hits the target.
  // The identical control reuses the constants of the distinct pair.
  const double C = measure_bilinear_constant({fa0, other, fa0 - other}, c.real("t1"), spec);
  const double C0 = std::max(l2_norm(fa0), l2_norm(other));
  const PhaseField& fb0 = c.flag("identical") ? fa0 : other;
  const double T = std::pow(c.real("target_factor") / (4 * C * C0), 2);
  std::vector<double> t1s;
  for (int i = 1; i <= nt; ++i) t1s.push_back(T * i / nt);
  const auto times = contraction_leaf_times(k_max, t1s, n);
  const double dt = std::min(c.real("dt"), T / 20);
  auto sa = state_of(reference_solve(fa0, spec, dt, times));
  auto sb = c.flag("identical") ? sa : state_of(reference_solve(fb0, spec, dt, times));
  auto tab = contraction_demo(sa, sb, k_max, T, t1s, spec, C, C0, n);
  const double limit = c.real("ratio_limit");
  bool pass = true;
  std::string csv = csv_line({"k", "norm", "ratio", "bound"});
  Json rows = Json::array();
  for (const auto& r : tab.rows) {
    if (c.flag("identical")) pass = pass && r.norm == 0;
    else if (r.k >= 1) pass = pass && r.ratio <= limit;
    rows.push_back({{"k", r.k}, {"norm", r.norm}, {"ratio", r.ratio}, {"bound", r.bound}});
    csv += csv_line({std::to_string(r.k), fmt17(r.norm), fmt17(r.ratio), fmt17(r.bound)});
  }
  RunOutput out;
  out.json = base_json(c, "duhamel-contraction", pass);
  out.json["C"] = C;
  out.json["C0"] = C0;
  out.json["T"] = T;
  out.json["factor"] = tab.factor;
  out.json["rows"] = rows;
  finish_json(out.json, c);
  out.csv = csv;
  out.exit_code = pass ? 0 : 1;
  out.summary = "duhamel-contraction T=" + fmt17(T) + " factor=" + fmt17(tab.factor) + " " + verdict_word(pass);
  return out;
}

inline SplitScheme scheme_of(const std::string& s) { return s == "lie" ? SplitScheme::Lie : SplitScheme::Strang; }

inline RunOutput run_uniqueness(const ExperimentConfig& c) {
  SolverConfig a, b;
  a.grid = b.grid = config_grid(c);
  a.kernel = b.kernel = config_kernel(c);
  a.dt = c.real("dt_a"), b.dt = c.real("dt_b");
  a.scheme = scheme_of(c.raw("scheme_a")), b.scheme = scheme_of(c.raw("scheme_b"));
  a.t_end = b.t_end = c.real("t_end");
  auto f0 = random_initial(a.grid, c.seed, c.real("amplitude"));
  auto tab = uniqueness_experiment(f0, a, b, c.list("times"), c.real("s"), c.real("r"));
  std::string csv = csv_line({"t", "l2_gap", "sobolev_gap"});
  Json rows = Json::array();
  for (const auto& r : tab.rows) {
    rows.push_back({{"t", r.t}, {"l2", r.l2}, {"sobolev", r.sobolev}});
    csv += csv_line({fmt17(r.t), fmt17(r.l2), fmt17(r.sobolev)});
  }
  RunOutput out;
  out.json = base_json(c, "uniqueness", true);
  out.json["sup_l2"] = tab.sup_l2;
  out.json["sup_sobolev"] = tab.sup_sobolev;
  out.json["rows"] = rows;
  finish_json(out.json, c);
  out.csv = csv;
  out.summary = "uniqueness sup_l2=" + fmt17(tab.sup_l2) + " sup_sobolev=" + fmt17(tab.sup_sobolev);
  return out;
}

inline RunOutput run_solve(const ExperimentConfig& c) {
  SolverConfig cfg;
  cfg.grid = config_grid(c);
  cfg.kernel = config_kernel(c);
  cfg.dt = c.real("dt");
  cfg.t_end = c.real("t_end");
  cfg.scheme = scheme_of(c.raw("scheme"));
  cfg.collisions = c.flag("collisions");
  const auto& init = c.raw("init");
  PhaseField f0 = init == "maxwellian" ? maxwellian(cfg.grid)
                  : init == "random"   ? random_initial(cfg.grid, c.seed, c.real("amplitude"))
                                       : perturbed_maxwellian(cfg.grid, c.real("eps"));
  auto tr = solve(f0, cfg, c.list("times"));
  std::string csv = csv_line({"t", "mass", "l2_norm"});
  Json rows = Json::array();
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double m = total_mass(tr.fields[i]), n = l2_norm(tr.fields[i]);
    rows.push_back({{"t", tr.times[i]}, {"mass", m}, {"l2", n}});
    csv += csv_line({fmt17(tr.times[i]), fmt17(m), fmt17(n)});
  }
  RunOutput out;
  out.json = base_json(c, "solve", true);
  out.json["grid"] = {{"d", cfg.grid.d()}, {"nx", cfg.grid.nx()}, {"nv", cfg.grid.nv()}, {"v_max", cfg.grid.v_max()}};
  out.json["times"] = tr.times;
  out.json["snapshot_layout"] = "complex128 little-endian, row-major (time, x, v), XV representation";
  out.json["rows"] = rows;
  finish_json(out.json, c);
  out.csv = csv;
  std::string bin;
  for (const auto& f : tr.fields) {
    PhaseField h = transform(f, Repr::XV);
    bin.append(reinterpret_cast<const char*>(h.data().data()), h.data().size() * sizeof(cplx));
  }
  out.extra_files.emplace_back(".bin", std::move(bin));
  out.summary = "solve steps_to=" + fmt17(cfg.t_end) + " mass_drift=" +
                fmt17(std::abs(total_mass(tr.fields.back()) - total_mass(tr.fields.front())));
  return out;
}

}  // namespace detail

/// Runs a parsed experiment. Module errors propagate; see run_and_report.
inline RunOutput run(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutput out;
  if (c.command == "strichartz") out = detail::run_strichartz(c);
  else if (c.command == "bilinear") out = detail::run_bilinear(c);
  else if (c.command == "annihilation") out = detail::run_annihilation(c);
  else if (c.command == "boardgame") out = detail::run_boardgame(c);
  else if (c.command == "duhamel")
    out = c.raw("mode") == "contraction" ? detail::run_contraction(c) : detail::run_reconstruction(c);
  else if (c.command == "uniqueness") out = detail::run_uniqueness(c);
  else if (c.command == "solve") out = detail::run_solve(c);
  else throw ConfigurationError("unknown command " + c.command);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.metadata = {{"wall_seconds", secs},
                  {"threads", thread_count()},
                  {"finished_unix", std::chrono::duration_cast<std::chrono::seconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count()}};
  return out;
}

/// Structured error document written in place of a report.
inline Json error_json(const std::string& kind, const std::string& message, const std::string& command) {
  Json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  j["command"] = command;
  j["convention_version"] = convention_version;
  return j;
}

/// `<out>.json`, `<out>.csv`, `<out>.meta.json` and any extra files.
inline void write_outputs(const RunOutput& r, const std::string& out) {
  write_text(out + ".json", r.json.dump(2) + "\n");
  write_text(out + ".csv", r.csv);
  write_text(out + ".meta.json", r.metadata.dump(2) + "\n");
  for (const auto& [suffix, body] : r.extra_files) write_text(out + suffix, body);
}

}  // namespace boltzkit
