#pragma once

// Controllers: a rule-based heuristic, MPC with AR forecasts, and SDDP
// (offline cut training plus a one-stage online problem).
//
// A policy decides u_t from the current state x_t and the noise w_t that
// has just been observed; it never sees w_{t+1}.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "microgrid/cuts.hpp"
#include "microgrid/lp.hpp"
#include "microgrid/model.hpp"
#include "microgrid/quantization.hpp"
#include "microgrid/scenarios.hpp"
#include "microgrid/stage_problem.hpp"

namespace microgrid {

struct DecisionDiagnostics {
  double solve_seconds = 0.0;
  LpStats lp;
};

struct PolicyDecision {
  Control control;
  double predicted_cost = 0.0;  ///< solver objective; 0 for the heuristic
  DecisionDiagnostics diagnostics;
};

class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  /// Fresh copy for another worker thread (own solver scratch, same data).
  virtual std::unique_ptr<Policy> clone() const = 0;
  /// Called before each scenario; clears any memory of the previous run.
  virtual void reset() {}
  virtual PolicyDecision decide(int t, const State& x, const Uncertainty& observed) = 0;
};

// ---------------------------------------------------------------------------
// Heuristic

struct HeuristicParams {
  double margin_deg_c = 1.0;  ///< hysteresis band above the setpoint
  double tank_target = 0.0;   ///< tank is heated while below this level (kWh)
};

/// Battery follows the observed net demand (charge on surplus, discharge on
/// deficit), tank heats at full power below its target, heater is a
/// thermostat with hysteresis. `heater_was_on` is the previous heater state.
PolicyDecision heuristic_decide(int t, const State& x, const Uncertainty& observed, const SystemParams& p,
                                const HeuristicParams& hp, bool heater_was_on);

class HeuristicPolicy final : public Policy {
 public:
  HeuristicPolicy(SystemParams p, HeuristicParams hp) : p_(std::move(p)), hp_(hp) {}

  std::string name() const override { return "heuristic"; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<HeuristicPolicy>(p_, hp_); }
  void reset() override { heater_on_ = false; }
  PolicyDecision decide(int t, const State& x, const Uncertainty& observed) override;

 private:
  SystemParams p_;
  HeuristicParams hp_;
  bool heater_on_ = false;
};

// ---------------------------------------------------------------------------
// MPC

/// Solves the horizon problem from t against `forecast` (w_{t+1} .. w_T)
/// and keeps the first decision.
PolicyDecision mpc_decide(int t, const State& x, std::span<const Uncertainty> forecast, const SystemParams& p,
                          std::span<const Cut> terminal, lp::SimplexSolver& solver);

class MpcPolicy final : public Policy {
 public:
  /// The forecaster is built from optimization scenarios only.
  MpcPolicy(SystemParams p, const OptimizationScenarios& opt, const State& x0);
  MpcPolicy(SystemParams p, ArModel ar, std::vector<Uncertainty> means, const State& x0);

  std::string name() const override { return "mpc"; }
  std::unique_ptr<Policy> clone() const override;
  void reset() override;
  PolicyDecision decide(int t, const State& x, const Uncertainty& observed) override;

  const ArModel& ar_model() const { return ar_; }

 private:
  SystemParams p_;
  ArModel ar_;
  std::vector<Uncertainty> means_;
  std::vector<Cut> terminal_;
  lp::SimplexSolver solver_;
  std::vector<lp::ColumnStatus> basis_;  ///< last horizon LP basis, seeds the next step
  int basis_step_ = -1;
};

/// Cost of the best anticipative plan for one scenario: the horizon problem
/// from t = 0 with the realized noise as forecast.
double perfect_foresight_cost(const Scenario& scenario, const State& x0, const SystemParams& p);

// ---------------------------------------------------------------------------
// SDDP

struct StoppingRule {
  int max_iters = 100;
  double lb_tol = 1e-4;   ///< relative lower-bound change regarded as stalled
  int stall_iters = 10;   ///< consecutive stalled iterations before stopping
};

struct TrainingIteration {
  int iteration = 0;
  double lower_bound = 0.0;
  double forward_cost = 0.0;
  std::size_t cuts = 0;
  double seconds = 0.0;
};

struct TrainingLog {
  std::vector<TrainingIteration> iterations;
  int stage_solves = 0;
  double max_overlap = 0.0;  ///< largest simultaneous charge/discharge seen in an LP optimum

  /// CSV `iteration,lower_bound,forward_cost,cuts,seconds`.
  void write_csv(std::ostream& out) const;
};

struct TrainingResult {
  ValueFunctions vf;
  TrainingLog log;
};

/// Forward passes sample w_{t+1} i.i.d. from `dists`; backward passes add
/// one cut per stage at the visited states.
TrainingResult sddp_train(const SystemParams& p, const StageDistributions& dists, const State& x0,
                          const StoppingRule& stop, std::uint64_t seed);

/// One-stage problem at t with the law of w_{t+1} and the cuts of stage t+1.
PolicyDecision sddp_decide(int t, const State& x, const ValueFunctions& vf, const DiscreteDistribution& next_noise,
                           const SystemParams& p, lp::SimplexSolver& solver);

class SddpPolicy final : public Policy {
 public:
  SddpPolicy(SystemParams p, std::shared_ptr<const ValueFunctions> vf,
             std::shared_ptr<const StageDistributions> online);

  std::string name() const override { return "sddp"; }
  std::unique_ptr<Policy> clone() const override;
  PolicyDecision decide(int t, const State& x, const Uncertainty& observed) override;

 private:
  SystemParams p_;
  std::shared_ptr<const ValueFunctions> vf_;
  std::shared_ptr<const StageDistributions> online_;
  lp::SimplexSolver solver_;
};

}  // namespace microgrid
