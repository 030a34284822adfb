#include "microgrid/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "microgrid/errors.hpp"

namespace microgrid {

namespace {

using nlohmann::json;

// Typed access to one JSON object with dotted field names in errors.
class Section {
 public:
  Section(const json& doc, std::string path) : path_(std::move(path)) {
    if (!doc.is_null() && !doc.is_object()) throw ValidationError(path_, "expected an object");
    if (doc.is_object()) obj_ = &doc;
  }

  void allow(std::initializer_list<const char*> keys) const {
    if (!obj_) return;
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : obj_->items()) {
      if (!known.count(key)) throw ValidationError(field(key), "unknown key");
    }
  }

  bool has(const char* key) const { return obj_ && obj_->contains(key); }
  const json& at(const char* key) const { return obj_ ? obj_->at(key) : null_; }
  const json& child(const char* key) const { return has(key) ? obj_->at(key) : null_; }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void get(const char* key, double& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number()) throw ValidationError(field(key), "expected a number");
    out = v.get<double>();
  }

  void get(const char* key, int& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_integer()) throw ValidationError(field(key), "expected an integer");
    out = v.get<int>();
  }

  void get(const char* key, unsigned& out) const {
    std::uint64_t v = out;
    get(key, v);
    out = static_cast<unsigned>(v);
  }

  void get(const char* key, std::uint64_t& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) throw ValidationError(field(key), "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void get(const char* key, bool& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_boolean()) throw ValidationError(field(key), "expected true or false");
    out = v.get<bool>();
  }

  void get(const char* key, std::string& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_string()) throw ValidationError(field(key), "expected a string");
    out = v.get<std::string>();
  }

 private:
  const json* obj_ = nullptr;
  std::string path_;
  inline static const json null_ = nullptr;
};

std::string resolve(const std::string& path, const std::filesystem::path& base) {
  if (path.empty() || base.empty()) return path;
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (base / p).lexically_normal().string();
}

std::vector<double> read_series_csv(const std::string& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw FileError(path, "cannot open series file for " + field);
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    // Last comma-separated field of each row; a non-numeric first row is a header.
    const std::string cell = line.substr(line.find_last_of(',') == std::string::npos ? 0 : line.find_last_of(',') + 1);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0') {
      if (line_no == 1) continue;
      throw ParseError(path, line_no, "expected a number");
    }
    values.push_back(v);
  }
  return values;
}

std::vector<double> parse_series(const json& v, const std::string& field, const SystemParams& p,
                                 const std::filesystem::path& base) {
  const auto n = static_cast<std::size_t>(p.horizon_steps) + 1;
  std::vector<double> out;
  if (v.is_number()) {
    out.assign(n, v.get<double>());
  } else if (v.is_array()) {
    for (const auto& item : v) {
      if (!item.is_number()) throw ValidationError(field, "array entries must be numbers");
      out.push_back(item.get<double>());
    }
  } else if (v.is_object() && v.contains("csv")) {
    Section s(v, field);
    s.allow({"csv"});
    std::string path;
    s.get("csv", path);
    out = read_series_csv(resolve(path, base), field);
  } else if (v.is_object()) {
    Section s(v, field);
    s.allow({"mean", "amplitude", "peak_hour"});
    double mean = 0.0, amplitude = 0.0, peak = 15.0;
    s.get("mean", mean);
    s.get("amplitude", amplitude);
    s.get("peak_hour", peak);
    for (std::size_t t = 0; t < n; ++t) {
      const double hour = p.hour_of_step(static_cast<int>(t));
      out.push_back(mean + amplitude * std::cos(2.0 * std::numbers::pi * (hour - peak) / 24.0));
    }
  } else {
    throw ValidationError(field, "expected a number, an array, {\"csv\": path} or a daily profile");
  }
  if (out.size() != n) {
    throw ValidationError(field, "expected " + std::to_string(n) + " values, got " + std::to_string(out.size()));
  }
  return out;
}

void parse_system(const json& doc, RunConfig& cfg, const std::filesystem::path& base) {
  const Section s(doc, "system");
  s.allow({"delta", "horizon_steps", "rho_c", "rho_d", "b_min", "b_max", "f_b_max", "h_max", "tank", "f_h_max",
           "beta_h", "f_t_max", "r6c2", "kappa", "pi_hw_deficit", "theta_o", "p_int", "p_ext", "pi_e", "pi_d",
           "theta_set", "initial_state"});
  int steps = 96;
  double delta = 0.25;
  s.get("horizon_steps", steps);
  s.get("delta", delta);
  if (steps < 1) throw ValidationError("system.horizon_steps", "must be >= 1");
  if (!(delta > 0.0)) throw ValidationError("system.delta", "must be > 0");
  SystemParams& p = cfg.system;
  p = default_system_params(steps, delta);

  s.get("rho_c", p.rho_c);
  s.get("rho_d", p.rho_d);
  s.get("b_min", p.b_min);
  s.get("b_max", p.b_max);
  s.get("f_b_max", p.f_b_max);
  s.get("h_max", p.h_max);
  if (s.has("tank")) {
    if (s.has("h_max")) throw ValidationError("system.tank", "give either h_max or tank, not both");
    const Section tank(s.at("tank"), "system.tank");
    tank.allow({"volume_l", "c_p", "rho_water", "t_ref", "t_max"});
    TankConversion tc;
    tank.get("volume_l", tc.volume_l);
    tank.get("c_p", tc.c_p);
    tank.get("rho_water", tc.rho_water);
    tank.get("t_ref", tc.t_ref);
    tank.get("t_max", tc.t_max);
    p.h_max = tc.h_max_kwh();
  }
  s.get("f_h_max", p.f_h_max);
  s.get("beta_h", p.beta_h);
  s.get("f_t_max", p.f_t_max);
  s.get("kappa", p.kappa);
  s.get("pi_hw_deficit", p.pi_hw_deficit);

  const Section r(s.child("r6c2"), "system.r6c2");
  r.allow({"r_i", "r_s", "r_m", "r_e", "r_v", "r_f", "c_i", "c_m", "gamma"});
  r.get("r_i", p.r6c2.r_i);
  r.get("r_s", p.r6c2.r_s);
  r.get("r_m", p.r6c2.r_m);
  r.get("r_e", p.r6c2.r_e);
  r.get("r_v", p.r6c2.r_v);
  r.get("r_f", p.r6c2.r_f);
  r.get("c_i", p.r6c2.c_i);
  r.get("c_m", p.r6c2.c_m);
  r.get("gamma", p.r6c2.gamma);

  const std::pair<const char*, std::vector<double>*> series[] = {
      {"theta_o", &p.theta_o}, {"p_int", &p.p_int}, {"p_ext", &p.p_ext},
      {"pi_e", &p.pi_e},       {"pi_d", &p.pi_d},   {"theta_set", &p.theta_set}};
  for (const auto& [key, target] : series) {
    if (s.has(key)) *target = parse_series(s.at(key), s.field(key), p, base);
  }

  const Section x(s.child("initial_state"), "system.initial_state");
  x.allow({"b", "h", "theta_w", "theta_i"});
  x.get("b", cfg.initial_state.b);
  x.get("h", cfg.initial_state.h);
  x.get("theta_w", cfg.initial_state.theta_w);
  x.get("theta_i", cfg.initial_state.theta_i);
}

void parse_generator(const json& doc, RunConfig& cfg) {
  const Section s(doc, "generator");
  s.allow({"seed", "base_kw", "morning_peak_kw", "morning_hour", "morning_width_h", "midday_peak_kw", "midday_hour",
           "midday_width_h", "evening_peak_kw", "evening_hour", "evening_width_h", "amplitude_sigma",
           "time_shift_sd_h", "noise_ar", "noise_sd", "spike_rate_per_h", "spike_kw", "shower_count_morning",
           "shower_count_evening", "shower_kwh_min", "shower_kwh_max", "small_draw_prob", "small_draw_kw",
           "pv_daily_kwh", "pv_noon_hour", "pv_width_h", "cloud_min", "pv_noise_sd"});
  GeneratorConfig& g = cfg.generator;
  g.horizon_steps = cfg.system.horizon_steps;
  g.delta = cfg.system.delta;
  s.get("seed", cfg.generator_seed);
  s.get("base_kw", g.base_kw);
  s.get("morning_peak_kw", g.morning_peak_kw);
  s.get("morning_hour", g.morning_hour);
  s.get("morning_width_h", g.morning_width_h);
  s.get("midday_peak_kw", g.midday_peak_kw);
  s.get("midday_hour", g.midday_hour);
  s.get("midday_width_h", g.midday_width_h);
  s.get("evening_peak_kw", g.evening_peak_kw);
  s.get("evening_hour", g.evening_hour);
  s.get("evening_width_h", g.evening_width_h);
  s.get("amplitude_sigma", g.amplitude_sigma);
  s.get("time_shift_sd_h", g.time_shift_sd_h);
  s.get("noise_ar", g.noise_ar);
  s.get("noise_sd", g.noise_sd);
  s.get("spike_rate_per_h", g.spike_rate_per_h);
  s.get("spike_kw", g.spike_kw);
  s.get("shower_count_morning", g.shower_count_morning);
  s.get("shower_count_evening", g.shower_count_evening);
  s.get("shower_kwh_min", g.shower_kwh_min);
  s.get("shower_kwh_max", g.shower_kwh_max);
  s.get("small_draw_prob", g.small_draw_prob);
  s.get("small_draw_kw", g.small_draw_kw);
  s.get("pv_daily_kwh", g.pv_daily_kwh);
  s.get("pv_noon_hour", g.pv_noon_hour);
  s.get("pv_width_h", g.pv_width_h);
  s.get("cloud_min", g.cloud_min);
  s.get("pv_noise_sd", g.pv_noise_sd);
}

json series_json(const std::vector<double>& v) { return json(v); }

}  // namespace

void RunConfig::validate() const {
  system.validate();
  generator.validate();
  if (generator.horizon_steps != system.horizon_steps || generator.delta != system.delta) {
    throw ValidationError("generator", "horizon and time step must match the system section");
  }
  try {
    check_state(initial_state, system);
  } catch (const ConstraintViolation& e) {
    throw ValidationError("system.initial_state", e.what());
  }
  if (sddp.s_offline < 1) throw ValidationError("sddp.S_offline", "must be >= 1");
  if (sddp.s_online < 1) throw ValidationError("sddp.S_online", "must be >= 1");
  if (sddp.max_iters < 1) throw ValidationError("sddp.max_iters", "must be >= 1");
  if (!(sddp.lb_tol >= 0.0)) throw ValidationError("sddp.lb_tol", "must be >= 0");
  if (sddp.stall_iters < 0) throw ValidationError("sddp.stall_iters", "must be >= 0");
  if (!(sddp.quantization_tol >= 0.0)) throw ValidationError("sddp.quantization_tol", "must be >= 0");
  if (sddp.quantization_max_iter < 1) throw ValidationError("sddp.quantization_max_iter", "must be >= 1");
  if (!(heuristic.margin_deg_c >= 0.0)) throw ValidationError("heuristic.margin_deg_c", "must be >= 0");
  if (assessment.n_opt < 2) throw ValidationError("assessment.n_opt", "must be >= 2");
  if (assessment.n_sim < 2) throw ValidationError("assessment.n_sim", "must be >= 2");
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ValidationError("config", "expected a JSON object");
  const Section root(doc, "");
  root.allow({"name", "system", "generator", "sddp", "mpc", "heuristic", "assessment", "paths"});

  RunConfig cfg;
  root.get("name", cfg.name);
  parse_system(root.child("system"), cfg, base_dir);
  parse_generator(root.child("generator"), cfg);

  const Section sddp(root.child("sddp"), "sddp");
  sddp.allow({"S_offline", "S_online", "max_iters", "lb_tol", "stall_iters", "seed", "quantization_tol",
              "quantization_max_iter"});
  sddp.get("S_offline", cfg.sddp.s_offline);
  cfg.sddp.s_online = cfg.sddp.s_offline;
  sddp.get("S_online", cfg.sddp.s_online);
  sddp.get("max_iters", cfg.sddp.max_iters);
  sddp.get("lb_tol", cfg.sddp.lb_tol);
  sddp.get("stall_iters", cfg.sddp.stall_iters);
  sddp.get("seed", cfg.sddp.seed);
  sddp.get("quantization_tol", cfg.sddp.quantization_tol);
  sddp.get("quantization_max_iter", cfg.sddp.quantization_max_iter);

  const Section mpc(root.child("mpc"), "mpc");
  mpc.allow({"enabled"});
  mpc.get("enabled", cfg.mpc.enabled);

  const Section heuristic(root.child("heuristic"), "heuristic");
  heuristic.allow({"margin_deg_c"});
  heuristic.get("margin_deg_c", cfg.heuristic.margin_deg_c);

  const Section assess(root.child("assessment"), "assessment");
  assess.allow({"n_opt", "n_sim", "seed", "threads", "record_trajectories"});
  assess.get("n_opt", cfg.assessment.n_opt);
  assess.get("n_sim", cfg.assessment.n_sim);
  assess.get("seed", cfg.assessment.seed);
  assess.get("threads", cfg.assessment.threads);
  assess.get("record_trajectories", cfg.assessment.record_trajectories);

  const Section paths(root.child("paths"), "paths");
  paths.allow({"scenarios", "cuts", "out_dir"});
  paths.get("scenarios", cfg.paths.scenarios);
  paths.get("cuts", cfg.paths.cuts);
  paths.get("out_dir", cfg.paths.out_dir);
  cfg.paths.scenarios = resolve(cfg.paths.scenarios, base_dir);
  cfg.paths.cuts = resolve(cfg.paths.cuts, base_dir);
  cfg.paths.out_dir = resolve(cfg.paths.out_dir, base_dir);

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError(path, "cannot open config");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path, 0, e.what());
  }
  return parse_config(doc, std::filesystem::path(path).parent_path());
}

json to_json(const RunConfig& cfg) {
  const SystemParams& p = cfg.system;
  const GeneratorConfig& g = cfg.generator;
  json doc;
  doc["name"] = cfg.name;
  doc["system"] = {
      {"delta", p.delta},
      {"horizon_steps", p.horizon_steps},
      {"rho_c", p.rho_c},
      {"rho_d", p.rho_d},
      {"b_min", p.b_min},
      {"b_max", p.b_max},
      {"f_b_max", p.f_b_max},
      {"h_max", p.h_max},
      {"f_h_max", p.f_h_max},
      {"beta_h", p.beta_h},
      {"f_t_max", p.f_t_max},
      {"r6c2",
       {{"r_i", p.r6c2.r_i},
        {"r_s", p.r6c2.r_s},
        {"r_m", p.r6c2.r_m},
        {"r_e", p.r6c2.r_e},
        {"r_v", p.r6c2.r_v},
        {"r_f", p.r6c2.r_f},
        {"c_i", p.r6c2.c_i},
        {"c_m", p.r6c2.c_m},
        {"gamma", p.r6c2.gamma}}},
      {"kappa", p.kappa},
      {"pi_hw_deficit", p.pi_hw_deficit},
      {"theta_o", series_json(p.theta_o)},
      {"p_int", series_json(p.p_int)},
      {"p_ext", series_json(p.p_ext)},
      {"pi_e", series_json(p.pi_e)},
      {"pi_d", series_json(p.pi_d)},
      {"theta_set", series_json(p.theta_set)},
      {"initial_state",
       {{"b", cfg.initial_state.b},
        {"h", cfg.initial_state.h},
        {"theta_w", cfg.initial_state.theta_w},
        {"theta_i", cfg.initial_state.theta_i}}},
  };
  doc["generator"] = {
      {"seed", cfg.generator_seed},
      {"base_kw", g.base_kw},
      {"morning_peak_kw", g.morning_peak_kw},
      {"morning_hour", g.morning_hour},
      {"morning_width_h", g.morning_width_h},
      {"midday_peak_kw", g.midday_peak_kw},
      {"midday_hour", g.midday_hour},
      {"midday_width_h", g.midday_width_h},
      {"evening_peak_kw", g.evening_peak_kw},
      {"evening_hour", g.evening_hour},
      {"evening_width_h", g.evening_width_h},
      {"amplitude_sigma", g.amplitude_sigma},
      {"time_shift_sd_h", g.time_shift_sd_h},
      {"noise_ar", g.noise_ar},
      {"noise_sd", g.noise_sd},
      {"spike_rate_per_h", g.spike_rate_per_h},
      {"spike_kw", g.spike_kw},
      {"shower_count_morning", g.shower_count_morning},
      {"shower_count_evening", g.shower_count_evening},
      {"shower_kwh_min", g.shower_kwh_min},
      {"shower_kwh_max", g.shower_kwh_max},
      {"small_draw_prob", g.small_draw_prob},
      {"small_draw_kw", g.small_draw_kw},
      {"pv_daily_kwh", g.pv_daily_kwh},
      {"pv_noon_hour", g.pv_noon_hour},
      {"pv_width_h", g.pv_width_h},
      {"cloud_min", g.cloud_min},
      {"pv_noise_sd", g.pv_noise_sd},
  };
  doc["sddp"] = {{"S_offline", cfg.sddp.s_offline},
                 {"S_online", cfg.sddp.s_online},
                 {"max_iters", cfg.sddp.max_iters},
                 {"lb_tol", cfg.sddp.lb_tol},
                 {"stall_iters", cfg.sddp.stall_iters},
                 {"seed", cfg.sddp.seed},
                 {"quantization_tol", cfg.sddp.quantization_tol},
                 {"quantization_max_iter", cfg.sddp.quantization_max_iter}};
  doc["mpc"] = {{"enabled", cfg.mpc.enabled}};
  doc["heuristic"] = {{"margin_deg_c", cfg.heuristic.margin_deg_c}};
  doc["assessment"] = {{"n_opt", cfg.assessment.n_opt},
                       {"n_sim", cfg.assessment.n_sim},
                       {"seed", cfg.assessment.seed},
                       {"threads", cfg.assessment.threads},
                       {"record_trajectories", cfg.assessment.record_trajectories}};
  doc["paths"] = {{"scenarios", cfg.paths.scenarios}, {"cuts", cfg.paths.cuts}, {"out_dir", cfg.paths.out_dir}};
  return doc;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace microgrid
