#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "microgrid/assess.hpp"
#include "microgrid/config.hpp"
#include "microgrid/errors.hpp"
#include "microgrid/policies.hpp"
#include "microgrid/quantization.hpp"
#include "microgrid/scenarios.hpp"

#ifndef MICROGRID_VERSION
#define MICROGRID_VERSION "0.0.0"
#endif

namespace microgrid::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
};

// Collects what a command read and wrote for manifest.json.
struct Run {
  std::string command;
  std::string config_path;
  RunConfig cfg;
  fs::path out_dir;
  json inputs = json::object();
  json outputs = json::array();
  json results = json::object();

  fs::path output(const std::string& name) const { return out_dir / name; }
  void wrote(const fs::path& path) { outputs.push_back(path.lexically_relative(out_dir).generic_string()); }
};

void setup_logging() {
  auto logger = spdlog::get("microgrid");
  if (!logger) logger = spdlog::stderr_color_mt("microgrid");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("MICROGRID_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("MICROGRID_LOG={} is not a log level; using info", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FileError(path.string(), "cannot write");
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw FileError(path.string(), "error writing");
}

template <class Writer>
void write_file(Run& run, const fs::path& path, Writer&& writer) {
  std::ofstream out = open_output(path);
  writer(out);
  close_output(out, path);
  run.wrote(path);
  spdlog::info("wrote {}", path.string());
}

Run start(const std::string& command, const GlobalOptions& g) {
  Run run;
  run.command = command;
  run.config_path = g.config;
  run.cfg = load_config(g.config);
  if (g.seed) {
    run.cfg.generator_seed = *g.seed;
    run.cfg.sddp.seed = *g.seed;
    run.cfg.assessment.seed = *g.seed;
  }
  if (g.threads) run.cfg.assessment.threads = *g.threads;
  run.out_dir = g.out ? fs::path(*g.out) : fs::path(run.cfg.paths.out_dir);
  fs::create_directories(run.out_dir);
  spdlog::info("{}: config '{}' ({}), output in {}", command, run.cfg.name, config_hash(run.cfg),
               run.out_dir.string());
  return run;
}

void write_manifest(Run& run) {
  const RunConfig& cfg = run.cfg;
  json m;
  m["command"] = run.command;
  m["version"] = MICROGRID_VERSION;
  m["compiler"] = std::string("gcc ") + __VERSION__;
  m["libraries"] = {
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                            "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
      {"cli11", CLI11_VERSION},
      {"spdlog", std::to_string(SPDLOG_VER_MAJOR) + "." + std::to_string(SPDLOG_VER_MINOR) + "." +
                     std::to_string(SPDLOG_VER_PATCH)}};
  m["config"] = {{"path", run.config_path}, {"name", cfg.name}, {"hash", config_hash(cfg)}};
  m["seeds"] = {{"generator", cfg.generator_seed}, {"sddp", cfg.sddp.seed}, {"assessment", cfg.assessment.seed}};
  m["inputs"] = run.inputs;
  run.wrote(run.output("manifest.json"));
  m["outputs"] = run.outputs;
  m["results"] = run.results;
  std::ofstream out = open_output(run.output("manifest.json"));
  out << m.dump(2) << '\n';
  close_output(out, run.output("manifest.json"));
}

std::string scenario_path(const Run& run, const std::string& flag) {
  const std::string path = flag.empty() ? run.cfg.paths.scenarios : flag;
  if (path.empty()) throw ValidationError("paths.scenarios", "no scenario file given (use --scenarios)");
  return path;
}

ScenarioSet read_scenario_file(Run& run, const std::string& path) {
  ScenarioSet all = load_scenarios(path);
  if (all.horizon_steps() != run.cfg.system.horizon_steps) {
    throw ValidationError("scenarios", path + " has " + std::to_string(all.horizon_steps()) +
                                           " steps, config expects " +
                                           std::to_string(run.cfg.system.horizon_steps));
  }
  run.inputs["scenarios"] = path;
  spdlog::info("read {} scenarios from {}", all.size(), path);
  return all;
}

ScenarioSet generate(Run& run) {
  const RunConfig& cfg = run.cfg;
  const std::size_t n = cfg.assessment.n_opt + cfg.assessment.n_sim;
  spdlog::info("generating {} scenarios of {} steps", n, cfg.system.horizon_steps);
  return generate_scenarios(cfg.generator, n, cfg.generator_seed);
}

// The optimization half feeds every statistical model; the assessment half
// is capped at n_sim scenarios.
std::pair<OptimizationScenarios, AssessmentScenarios> split(const Run& run, const ScenarioSet& all) {
  const AssessmentSettings& a = run.cfg.assessment;
  auto [opt, sim] = split_scenarios(all, a.n_opt, a.seed);
  if (sim.size() > a.n_sim) {
    ScenarioSet capped = sim.set();
    capped.data.resize(a.n_sim);
    sim = AssessmentScenarios(std::move(capped));
  } else if (sim.size() < a.n_sim) {
    spdlog::warn("only {} assessment scenarios available (n_sim = {})", sim.size(), a.n_sim);
  }
  spdlog::info("split: {} optimization, {} assessment scenarios", opt.size(), sim.size());
  return {std::move(opt), std::move(sim)};
}

StageDistributions quantize(const Run& run, const OptimizationScenarios& opt, int cells) {
  LloydMaxOptions q;
  q.cells = cells;
  q.tol = run.cfg.sddp.quantization_tol;
  q.max_iter = run.cfg.sddp.quantization_max_iter;
  q.seed = run.cfg.sddp.seed;
  return quantize_stagewise(opt, q);
}

ValueFunctions train(Run& run, const OptimizationScenarios& opt, const fs::path& cuts_path) {
  const RunConfig& cfg = run.cfg;
  const StageDistributions dists = quantize(run, opt, cfg.sddp.s_offline);
  StoppingRule stop;
  stop.max_iters = cfg.sddp.max_iters;
  stop.lb_tol = cfg.sddp.lb_tol;
  stop.stall_iters = cfg.sddp.stall_iters;
  spdlog::info("training SDDP: S_offline = {}, at most {} iterations", cfg.sddp.s_offline, stop.max_iters);
  TrainingResult result = sddp_train(cfg.system, dists, cfg.initial_state, stop, cfg.sddp.seed);
  for (const TrainingIteration& it : result.log.iterations) {
    spdlog::debug("iteration {}: lower bound {:.6f}, forward cost {:.6f}, {} cuts", it.iteration, it.lower_bound,
                  it.forward_cost, it.cuts);
  }
  const TrainingIteration& last = result.log.iterations.back();
  spdlog::info("trained: {} iterations, lower bound {:.6f}, {} cuts, {:.2f} s", last.iteration, last.lower_bound,
               last.cuts, last.seconds);
  run.results["training"] = {{"iterations", last.iteration},
                             {"lower_bound", last.lower_bound},
                             {"cuts", last.cuts},
                             {"max_overlap", result.log.max_overlap}};

  write_file(run, cuts_path, [&](std::ostream& out) { write_cuts(out, result.vf); });
  write_file(run, run.output("training_log.csv"), [&](std::ostream& out) { result.log.write_csv(out); });
  return std::move(result.vf);
}

ValueFunctions read_cuts_file(Run& run, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError(path, "cannot open");
  ValueFunctions vf = read_cuts(in, path);
  if (vf.horizon_steps() != run.cfg.system.horizon_steps) {
    throw ValidationError("cuts", path + " has " + std::to_string(vf.horizon_steps()) + " stages, config expects " +
                                      std::to_string(run.cfg.system.horizon_steps));
  }
  run.inputs["cuts"] = path;
  return vf;
}

void print_summary(const AssessmentReport& r) {
  std::cout << "policy       mean (EUR)   ci95      std       decision ms (mean/max)\n";
  std::cout << std::fixed;
  for (const PolicySummary& s : r.policies) {
    std::cout << std::left << std::setw(12) << s.name << ' ' << std::right << std::setprecision(4) << std::setw(10)
              << s.stats.mean << "  " << std::setw(8) << s.stats.ci95 << "  " << std::setw(8) << s.stats.std << "  "
              << std::setprecision(3) << s.mean_decision_ms << " / " << s.max_decision_ms << '\n';
  }
  for (const Comparison& c : r.comparisons) {
    std::cout << c.a << " - " << c.b << ": mean gap " << std::setprecision(4) << c.gap_stats.mean << " +/- "
              << c.gap_stats.ci95 << ", " << c.a << " cheaper on " << std::setprecision(1)
              << 100.0 * c.win_fraction << "% of scenarios\n";
  }
  std::cout.unsetf(std::ios::floatfield);
}

void assess(Run& run, const OptimizationScenarios& opt, const AssessmentScenarios& sim, ValueFunctions vf,
            const fs::path& report_path, bool record) {
  const RunConfig& cfg = run.cfg;
  std::vector<std::unique_ptr<Policy>> policies;
  HeuristicParams hp;
  hp.margin_deg_c = cfg.heuristic.margin_deg_c;
  hp.tank_target = cfg.initial_state.h;
  policies.push_back(std::make_unique<HeuristicPolicy>(cfg.system, hp));
  if (cfg.mpc.enabled) policies.push_back(std::make_unique<MpcPolicy>(cfg.system, opt, cfg.initial_state));
  auto online = std::make_shared<const StageDistributions>(quantize(run, opt, cfg.sddp.s_online));
  policies.push_back(std::make_unique<SddpPolicy>(
      cfg.system, std::make_shared<const ValueFunctions>(std::move(vf)), std::move(online)));

  AssessmentOptions options;
  options.threads = cfg.assessment.threads;
  options.record_trajectories = record || cfg.assessment.record_trajectories;
  spdlog::info("assessing {} policies on {} scenarios", policies.size(), sim.size());
  const AssessmentReport report = run_assessment(policies, sim, cfg.initial_state, cfg.system, options);

  json summary = json::object();
  for (const PolicySummary& s : report.policies) {
    summary[s.name] = {{"mean", s.stats.mean}, {"std", s.stats.std}, {"ci95", s.stats.ci95}};
  }
  run.results["assessment"] = summary;

  write_file(run, report_path, [&](std::ostream& out) { write_report_json(out, report); });
  write_file(run, run.output("costs.csv"), [&](std::ostream& out) { write_costs_csv(out, report); });
  write_file(run, run.output("gaps.csv"), [&](std::ostream& out) { write_gaps_csv(out, report); });
  write_file(run, run.output("gap_histogram.csv"), [&](std::ostream& out) { write_histogram_csv(out, report); });
  if (options.record_trajectories) {
    for (const PolicySummary& s : report.policies) {
      write_file(run, run.output("trajectories_" + s.name + ".csv"),
                 [&](std::ostream& out) { write_trajectories_csv(out, s); });
    }
  }
  print_summary(report);
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Home microgrid energy management: scenario generation, SDDP training and policy assessment",
               "microgrid"};
  app.set_version_flag("--version", MICROGRID_VERSION);
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config, "run configuration (JSON)")->required();
  app.add_option("--seed", g.seed, "override every seed in the configuration");
  app.add_option("--threads", g.threads, "cap on assessment worker threads (0: all cores)");
  app.add_option("--out", g.out, "output directory (default: paths.out_dir)");

  auto* gen = app.add_subcommand("generate", "write n_opt + n_sim synthetic scenarios to scenarios.csv");

  std::string train_scenarios, cuts_out;
  auto* tr = app.add_subcommand("train", "fit SDDP cuts on the optimization half of a scenario file");
  tr->add_option("--scenarios", train_scenarios, "scenario CSV (default: paths.scenarios)");
  tr->add_option("--cuts-out", cuts_out, "cuts JSON to write (default: <out>/cuts.json)");

  std::string assess_scenarios, cuts_in, report_out;
  bool record = false;
  auto* as = app.add_subcommand("assess", "simulate heuristic, MPC and SDDP on the assessment half");
  as->add_option("--scenarios", assess_scenarios, "scenario CSV (default: paths.scenarios)");
  as->add_option("--cuts", cuts_in, "cuts JSON (default: paths.cuts, then <out>/cuts.json)");
  as->add_option("--report-out", report_out, "report JSON to write (default: <out>/report.json)");
  as->add_flag("--record-trajectories", record, "write trajectories_<policy>.csv");

  bool bench_record = false;
  auto* bench = app.add_subcommand("bench", "generate, split, train and assess in one run");
  bench->add_flag("--record-trajectories", bench_record, "write trajectories_<policy>.csv");

  for (auto* sub : {gen, tr, as, bench}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  setup_logging();
  try {
    if (gen->parsed()) {
      Run r = start("generate", g);
      const ScenarioSet all = generate(r);
      const fs::path path = r.output("scenarios.csv");
      save_scenarios(all, path.string());
      r.wrote(path);
      spdlog::info("wrote {}", path.string());
      write_manifest(r);
    } else if (tr->parsed()) {
      Run r = start("train", g);
      const ScenarioSet all = read_scenario_file(r, scenario_path(r, train_scenarios));
      const auto [opt, sim] = split(r, all);
      train(r, opt, cuts_out.empty() ? r.output("cuts.json") : fs::path(cuts_out));
      write_manifest(r);
    } else if (as->parsed()) {
      Run r = start("assess", g);
      const std::string cuts_path =
          !cuts_in.empty() ? cuts_in : !r.cfg.paths.cuts.empty() ? r.cfg.paths.cuts : r.output("cuts.json").string();
      const ScenarioSet all = read_scenario_file(r, scenario_path(r, assess_scenarios));
      ValueFunctions vf = read_cuts_file(r, cuts_path);
      const auto [opt, sim] = split(r, all);
      assess(r, opt, sim, std::move(vf), report_out.empty() ? r.output("report.json") : fs::path(report_out),
             record);
      write_manifest(r);
    } else if (bench->parsed()) {
      Run r = start("bench", g);
      const ScenarioSet all = generate(r);
      const fs::path path = r.output("scenarios.csv");
      save_scenarios(all, path.string());
      r.wrote(path);
      const auto [opt, sim] = split(r, all);
      ValueFunctions vf = train(r, opt, r.output("cuts.json"));
      assess(r, opt, sim, std::move(vf), r.output("report.json"), bench_record);
      write_manifest(r);
    }
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFile;
  } catch (const ValidationError& e) {
    std::cerr << "error: invalid " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitOk;
}

}  // namespace microgrid::cli
