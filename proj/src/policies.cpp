#include "microgrid/policies.hpp"

#include <chrono>
#include <cmath>

#include "microgrid/rng.hpp"

namespace microgrid {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

// ---------------------------------------------------------------------------

PolicyDecision heuristic_decide(int t, const State& x, const Uncertainty& observed, const SystemParams& p,
                                const HeuristicParams& hp, bool heater_was_on) {
  const ControlBox box = admissible_controls(x, p);
  const auto tu = static_cast<std::size_t>(t);
  Control u;
  if (observed.d_el_net < 0.0) {
    u.f_b = std::min(-observed.d_el_net, box.f_b.hi);
  } else if (observed.d_el_net > 0.0) {
    u.f_b = -std::min(observed.d_el_net, -box.f_b.lo);
  }
  u.f_h = x.h < hp.tank_target ? box.f_h.hi : 0.0;

  bool heater_on = heater_was_on;
  if (x.theta_i < p.theta_set[tu]) {
    heater_on = true;
  } else if (x.theta_i > p.theta_set[tu] + hp.margin_deg_c) {
    heater_on = false;
  }
  u.f_t = heater_on ? p.f_t_max : 0.0;

  PolicyDecision d;
  d.control = box.project(u);
  return d;
}

PolicyDecision HeuristicPolicy::decide(int t, const State& x, const Uncertainty& observed) {
  const auto start = Clock::now();
  PolicyDecision d = heuristic_decide(t, x, observed, p_, hp_, heater_on_);
  heater_on_ = d.control.f_t > 0.0;
  d.diagnostics.solve_seconds = seconds_since(start);
  return d;
}

// ---------------------------------------------------------------------------

PolicyDecision mpc_decide(int t, const State& x, std::span<const Uncertainty> forecast, const SystemParams& p,
                          std::span<const Cut> terminal, lp::SimplexSolver& solver) {
  const auto start = Clock::now();
  const HorizonSolution sol = solve_horizon_problem(t, x, forecast, terminal, p, solver);
  PolicyDecision d;
  d.control = sol.control;
  d.predicted_cost = sol.objective;
  d.diagnostics.lp = sol.stats;
  d.diagnostics.solve_seconds = seconds_since(start);
  return d;
}

MpcPolicy::MpcPolicy(SystemParams p, const OptimizationScenarios& opt, const State& x0)
    : MpcPolicy(std::move(p), fit_ar(opt), stage_means(opt), x0) {}

MpcPolicy::MpcPolicy(SystemParams p, ArModel ar, std::vector<Uncertainty> means, const State& x0)
    : p_(std::move(p)), ar_(std::move(ar)), means_(std::move(means)), terminal_(terminal_cuts(x0, p_.kappa)) {
  if (ar_.horizon_steps() != p_.horizon_steps) {
    throw ValidationError("mpc", "forecaster horizon differs from system.horizon_steps");
  }
}

std::unique_ptr<Policy> MpcPolicy::clone() const {
  auto copy = std::make_unique<MpcPolicy>(*this);
  copy->solver_ = lp::SimplexSolver();
  copy->reset();
  return copy;
}

void MpcPolicy::reset() {
  basis_.clear();
  basis_step_ = -1;
}

PolicyDecision MpcPolicy::decide(int t, const State& x, const Uncertainty& observed) {
  const auto start = Clock::now();
  const std::vector<Uncertainty> forecast = update_forecast(ar_, t, observed, means_);
  std::span<const lp::ColumnStatus> previous;
  if (basis_step_ == t - 1) previous = basis_;
  HorizonSolution sol = solve_horizon_problem(t, x, forecast, terminal_, p_, solver_, previous);
  basis_ = std::move(sol.basis);
  basis_step_ = t;
  PolicyDecision d;
  d.control = sol.control;
  d.predicted_cost = sol.objective;
  d.diagnostics.lp = sol.stats;
  d.diagnostics.solve_seconds = seconds_since(start);
  return d;
}

double perfect_foresight_cost(const Scenario& scenario, const State& x0, const SystemParams& p) {
  if (scenario.size() != static_cast<std::size_t>(p.horizon_steps) + 1) {
    throw std::invalid_argument("perfect_foresight_cost: scenario length must be T + 1");
  }
  lp::SimplexSolver solver;
  const std::vector<Cut> terminal = terminal_cuts(x0, p.kappa);
  const std::span<const Uncertainty> future(scenario.data() + 1, scenario.size() - 1);
  return solve_horizon_problem(0, x0, future, terminal, p, solver).objective;
}

// ---------------------------------------------------------------------------

void TrainingLog::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "iteration,lower_bound,forward_cost,cuts,seconds\n";
  for (const TrainingIteration& it : iterations) {
    out << it.iteration << ',' << it.lower_bound << ',' << it.forward_cost << ',' << it.cuts << ',' << it.seconds
        << '\n';
  }
  out.precision(old_precision);
}

TrainingResult sddp_train(const SystemParams& p, const StageDistributions& dists, const State& x0,
                          const StoppingRule& stop, std::uint64_t seed) {
  p.validate();
  check_state(x0, p);
  const int steps = p.horizon_steps;
  if (dists.horizon_steps() != steps) {
    throw ValidationError("sddp", "noise distributions must cover stages 1 .. T");
  }
  if (stop.max_iters < 1) throw ValidationError("sddp.max_iters", "must be >= 1");

  TrainingResult result;
  result.vf = ValueFunctions::initial(steps, x0, p.kappa);
  lp::SimplexSolver solver;
  Rng rng(seed);
  const auto start = Clock::now();
  std::vector<State> visited(static_cast<std::size_t>(steps));
  int stalled = 0;
  double previous_lb = evaluate_vf(result.vf, 0, x0);

  for (int k = 1; k <= stop.max_iters; ++k) {
    // Forward pass.
    State x = x0;
    double cost = 0.0;
    for (int t = 0; t < steps; ++t) {
      const auto tu = static_cast<std::size_t>(t);
      visited[tu] = x;
      const DiscreteDistribution& law = dists.at(t + 1);
      const StageSolution sol = solve_stage_problem(t, x, law, result.vf.cuts[tu + 1], p, solver);
      ++result.log.stage_solves;
      result.log.max_overlap = std::max(result.log.max_overlap, sol.overlap);

      double u = rng.uniform();
      std::size_t pick = law.size() - 1;
      for (std::size_t s = 0; s < law.size(); ++s) {
        u -= law.weights[s];
        if (u < 0.0) {
          pick = s;
          break;
        }
      }
      const Uncertainty& w = law.points[pick];
      cost += stage_cost(t, x, sol.control, w, p);
      x = step(t, x, sol.control, w, p);
    }
    cost += terminal_cost(x, x0, p.kappa);

    // Backward pass.
    for (int t = steps - 1; t >= 0; --t) {
      const auto tu = static_cast<std::size_t>(t);
      const State& xt = visited[tu];
      const StageSolution sol = solve_stage_problem(t, xt, dists.at(t + 1), result.vf.cuts[tu + 1], p, solver);
      ++result.log.stage_solves;
      result.log.max_overlap = std::max(result.log.max_overlap, sol.overlap);
      Cut cut;
      cut.lambda = sol.gradient;
      const auto xa = xt.as_array();
      cut.beta = sol.value;
      for (std::size_t i = 0; i < State::kDim; ++i) cut.beta -= cut.lambda[i] * xa[i];
      result.vf.cuts[tu].push_back(cut);
    }

    const double lb = evaluate_vf(result.vf, 0, x0);
    result.log.iterations.push_back({k, lb, cost, result.vf.total_cuts(), seconds_since(start)});

    const double change = std::abs(lb - previous_lb) / std::max(1e-12, std::abs(lb));
    stalled = change < stop.lb_tol ? stalled + 1 : 0;
    previous_lb = lb;
    if (stop.stall_iters > 0 && stalled >= stop.stall_iters) break;
  }
  return result;
}

PolicyDecision sddp_decide(int t, const State& x, const ValueFunctions& vf, const DiscreteDistribution& next_noise,
                           const SystemParams& p, lp::SimplexSolver& solver) {
  const auto start = Clock::now();
  if (vf.horizon_steps() != p.horizon_steps) {
    throw std::invalid_argument("sddp_decide: value functions and system differ in horizon");
  }
  const StageSolution sol =
      solve_stage_problem(t, x, next_noise, vf.cuts[static_cast<std::size_t>(t) + 1], p, solver);
  PolicyDecision d;
  d.control = sol.control;
  d.predicted_cost = sol.value;
  d.diagnostics.lp = sol.stats;
  d.diagnostics.solve_seconds = seconds_since(start);
  return d;
}

SddpPolicy::SddpPolicy(SystemParams p, std::shared_ptr<const ValueFunctions> vf,
                       std::shared_ptr<const StageDistributions> online)
    : p_(std::move(p)), vf_(std::move(vf)), online_(std::move(online)) {
  if (!vf_ || !online_) throw std::invalid_argument("SddpPolicy: missing cuts or noise laws");
  if (vf_->horizon_steps() != p_.horizon_steps || online_->horizon_steps() != p_.horizon_steps) {
    throw ValidationError("sddp", "cuts and noise laws must match system.horizon_steps");
  }
}

std::unique_ptr<Policy> SddpPolicy::clone() const {
  return std::make_unique<SddpPolicy>(p_, vf_, online_);
}

PolicyDecision SddpPolicy::decide(int t, const State& x, const Uncertainty& /*observed*/) {
  return sddp_decide(t, x, *vf_, online_->at(t + 1), p_, solver_);
}

}  // namespace microgrid
