#pragma once

// Run configuration (JSON). Every section is optional; missing entries keep
// their defaults. Unknown keys are rejected so typos do not pass silently.
//
// Per-step series (system.theta_o, p_int, p_ext, pi_e, pi_d, theta_set)
// accept four forms:
//   3.5                                   constant
//   [v0, v1, ..., vT]                     explicit, length T + 1
//   {"csv": "file.csv"}                   one value per line (header optional)
//   {"mean": m, "amplitude": a, "peak_hour": h}   m + a cos(2 pi (hour - h) / 24)

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "microgrid/model.hpp"
#include "microgrid/scenarios.hpp"

namespace microgrid {

struct SddpSettings {
  int s_offline = 20;
  int s_online = 20;
  int max_iters = 100;
  double lb_tol = 1e-4;
  int stall_iters = 10;
  std::uint64_t seed = 1;
  double quantization_tol = 1e-6;
  int quantization_max_iter = 200;
};

struct MpcSettings {
  bool enabled = true;
};

struct HeuristicSettings {
  double margin_deg_c = 1.0;
};

struct AssessmentSettings {
  std::size_t n_opt = 200;
  std::size_t n_sim = 200;
  std::uint64_t seed = 7;
  unsigned threads = 0;
  bool record_trajectories = false;
};

struct PathSettings {
  std::string scenarios;  ///< CSV read by train/assess when no --scenarios flag is given
  std::string cuts;       ///< cuts JSON read by assess when no --cuts flag is given
  std::string out_dir = "out";
};

struct RunConfig {
  std::string name = "default";
  SystemParams system = default_system_params();
  State initial_state{2.0, 3.0, 17.0, 19.0};
  GeneratorConfig generator;
  std::uint64_t generator_seed = 1;
  SddpSettings sddp;
  MpcSettings mpc;
  HeuristicSettings heuristic;
  AssessmentSettings assessment;
  PathSettings paths;

  /// Throws ValidationError with a dotted field name.
  void validate() const;
};

/// Relative paths (series CSV files, paths.*) are resolved against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// Throws FileError when the file cannot be read, ParseError on bad JSON,
/// ValidationError on bad values.
RunConfig load_config(const std::string& path);

/// Normalized form: every field explicit, series expanded to arrays.
nlohmann::json to_json(const RunConfig& cfg);

/// FNV-1a (64 bit) of the normalized JSON text, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace microgrid
