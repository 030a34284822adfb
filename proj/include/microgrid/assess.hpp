#pragma once

// Out-of-sample assessment: roll each policy over the assessment scenarios,
// collect bills, and summarize them (mean, spread, confidence interval,
// scenario-wise gaps and wins).

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "microgrid/model.hpp"
#include "microgrid/policies.hpp"
#include "microgrid/scenarios.hpp"

namespace microgrid {

/// Disjoint halves of a scenario set, chosen by a seeded shuffle. Both
/// halves keep the original relative order. Needs 1 <= n_opt < all.size().
std::pair<OptimizationScenarios, AssessmentScenarios> split_scenarios(const ScenarioSet& all, std::size_t n_opt,
                                                                      std::uint64_t seed);

struct Trajectory {
  std::vector<State> states;     ///< x_0 .. x_T
  std::vector<Control> controls;  ///< u_0 .. u_{T-1}
  std::vector<Recourse> recourse;
  std::vector<double> stage_costs;
};

struct SimulationResult {
  double cost = 0.0;
  double decision_seconds = 0.0;  ///< summed over the T decisions
  double max_decision_seconds = 0.0;
  Trajectory trajectory;          ///< empty unless recorded
};

/// Runs one scenario. Every control is checked against admissible_controls,
/// every state against its bounds, and the grid balance
///   f_ne - spill = d_el_net + f_b + f_t + f_h
/// to 1e-12 at each step. Violations throw ConstraintViolation.
SimulationResult simulate_policy(Policy& policy, const Scenario& scenario, const State& x0, const SystemParams& p,
                                 bool record = false);

struct SampleStats {
  double mean = 0.0;
  double std = 0.0;   ///< sample standard deviation (n - 1); 0 for a single value
  double ci95 = 0.0;  ///< 1.96 std / sqrt(n)
  std::size_t n = 0;
};

SampleStats sample_stats(std::span<const double> values);

struct Histogram {
  double lo = 0.0;
  double width = 0.0;  ///< (max - min) / bins; 0 when all values coincide
  std::vector<std::size_t> counts;
};

Histogram make_histogram(std::span<const double> values, std::size_t bins = 40);

struct PolicySummary {
  std::string name;
  std::vector<double> costs;  ///< indexed like the assessment scenarios
  SampleStats stats;
  double mean_decision_ms = 0.0;
  double max_decision_ms = 0.0;
  std::vector<Trajectory> trajectories;
};

/// Scenario-wise comparison of policy `a` against policy `b`.
struct Comparison {
  std::string a;
  std::string b;
  std::vector<double> gaps;  ///< cost_a - cost_b per scenario
  SampleStats gap_stats;
  double win_fraction = 0.0;  ///< share of scenarios with cost_a < cost_b
  Histogram histogram;
};

struct AssessmentReport {
  std::size_t scenarios = 0;
  int horizon_steps = 0;
  std::vector<PolicySummary> policies;
  std::vector<Comparison> comparisons;  ///< every pair (i, j) with i < j, in policy order

  const PolicySummary& policy(const std::string& name) const;
  const Comparison& comparison(const std::string& a, const std::string& b) const;
};

struct AssessmentOptions {
  unsigned threads = 0;  ///< 0: hardware concurrency
  bool record_trajectories = false;
};

/// Each worker clones every policy once and takes scenarios from a shared
/// counter; results are stored by scenario index, so the report does not
/// depend on the thread count.
AssessmentReport run_assessment(const std::vector<std::unique_ptr<Policy>>& policies,
                                const AssessmentScenarios& scenarios, const State& x0, const SystemParams& p,
                                const AssessmentOptions& options = {});

/// Summary statistics from per-policy cost vectors of equal length.
AssessmentReport summarize(std::vector<PolicySummary> policies, int horizon_steps);

void write_report_json(std::ostream& out, const AssessmentReport& r);
/// `scenario,policy,cost`
void write_costs_csv(std::ostream& out, const AssessmentReport& r);
/// `scenario,a,b,gap`
void write_gaps_csv(std::ostream& out, const AssessmentReport& r);
/// `a,b,bin,lo,hi,count`
void write_histogram_csv(std::ostream& out, const AssessmentReport& r);
/// `scenario,t,b,h,theta_w,theta_i,f_ne` for one policy; f_ne is empty at t = T.
void write_trajectories_csv(std::ostream& out, const PolicySummary& s);

}  // namespace microgrid
