#include "microgrid/stage_problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace microgrid {

using lp::kInf;

namespace {

constexpr double kCutViolationTol = 1e-9;
constexpr std::size_t kCutsPerRound = 3;

Control netted(double charge, double discharge, double heater, double tank) {
  return {charge - discharge, heater, tank};
}

// Order of cut indices by decreasing value at `x`; ties by index.
std::vector<std::size_t> rank_cuts(std::span<const Cut> cuts, const std::vector<std::size_t>& ids, const State& x) {
  std::vector<std::size_t> out = ids;
  std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return cuts[a](x) > cuts[b](x); });
  return out;
}

}  // namespace

StageSolution solve_stage_problem(int t, const State& x, const DiscreteDistribution& noise,
                                  std::span<const Cut> next_cuts, const SystemParams& p,
                                  lp::SimplexSolver& solver) {
  if (t < 0 || t >= p.horizon_steps) throw std::out_of_range("solve_stage_problem: step outside [0, T)");
  if (next_cuts.empty()) throw std::invalid_argument("solve_stage_problem: no cuts for the next stage");
  if (noise.points.empty()) throw std::invalid_argument("solve_stage_problem: empty noise distribution");

  const ControlBox box = admissible_controls(x, p);
  const ThermalCoefficients tc = thermal_coefficients(p);
  const auto exo = thermal_exogenous_rate(p, t);
  const auto tu = static_cast<std::size_t>(t);
  const double d = p.delta;
  const std::size_t n_noise = noise.points.size();

  // Next state reached with u = 0, used to order the cuts so that the crash
  // basis of the simplex is feasible.
  const double wall0 = x.theta_w + d * (tc.a_ww * x.theta_w + tc.a_wi * x.theta_i + exo[0]);
  const double in0 = x.theta_i + d * (tc.a_iw * x.theta_w + tc.a_ii * x.theta_i + exo[1]);
  std::vector<State> crash_next(n_noise);
  for (std::size_t s = 0; s < n_noise; ++s) {
    crash_next[s] = {x.b, std::max(0.0, x.h - d * noise.points[s].d_hw), wall0, in0};
  }

  std::vector<std::vector<std::size_t>> active(n_noise);
  for (std::size_t s = 0; s < n_noise; ++s) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < next_cuts.size(); ++c) {
      if (next_cuts[c](crash_next[s]) > next_cuts[best](crash_next[s])) best = c;
    }
    active[s].push_back(best);
  }

  StageSolution out;
  out.stats.rounds = 0;
  out.stats.iterations = 0;
  while (true) {
    lp::LpBuilder b;
    int xin[State::kDim];
    int pin[State::kDim];
    const auto xa = x.as_array();
    for (std::size_t k = 0; k < State::kDim; ++k) {
      xin[k] = b.add_variable(-kInf, kInf, 0.0);
      pin[k] = b.add_row(xa[k]);
      b.set_coefficient(pin[k], xin[k], 1.0);
    }
    const int b_next = b.add_variable(p.b_min, p.b_max, 0.0);
    const int charge = b.add_variable(0.0, p.f_b_max, 0.0);
    const int discharge = b.add_variable(0.0, p.f_b_max, 0.0);
    const int r_batt = b.add_row(0.0);
    b.set_coefficient(r_batt, b_next, 1.0);
    b.set_coefficient(r_batt, xin[0], -1.0);
    b.set_coefficient(r_batt, charge, -d * p.rho_c);
    b.set_coefficient(r_batt, discharge, d / p.rho_d);

    const int h_cap = b.add_variable(-kInf, p.h_max, 0.0);
    const int tank = b.add_variable(0.0, p.f_h_max, 0.0);
    const int r_cap = b.add_row(0.0);
    b.set_coefficient(r_cap, h_cap, 1.0);
    b.set_coefficient(r_cap, xin[1], -1.0);
    b.set_coefficient(r_cap, tank, -d * p.beta_h);

    const int w_next = b.add_variable(-kInf, kInf, 0.0);
    const int heater = b.add_variable(0.0, p.f_t_max, 0.0);
    const int r_wall = b.add_row(d * exo[0]);
    b.set_coefficient(r_wall, w_next, 1.0);
    b.set_coefficient(r_wall, xin[2], -(1.0 + d * tc.a_ww));
    b.set_coefficient(r_wall, xin[3], -d * tc.a_wi);
    b.set_coefficient(r_wall, heater, -d * tc.g_w);

    const int i_next = b.add_variable(-kInf, kInf, 0.0);
    const int r_in = b.add_row(d * exo[1]);
    b.set_coefficient(r_in, i_next, 1.0);
    b.set_coefficient(r_in, xin[2], -d * tc.a_iw);
    b.set_coefficient(r_in, xin[3], -(1.0 + d * tc.a_ii));
    b.set_coefficient(r_in, heater, -d * tc.g_i);

    const int disc = b.add_variable(0.0, kInf, p.pi_d[tu]);
    const int disc_slack = b.add_variable(0.0, kInf, 0.0);
    const int r_disc = b.add_row(p.theta_set[tu]);
    b.set_coefficient(r_disc, disc, 1.0);
    b.set_coefficient(r_disc, disc_slack, -1.0);
    b.set_coefficient(r_disc, xin[3], 1.0);

    std::vector<int> h_next(n_noise);
    std::vector<int> epi(n_noise);
    for (std::size_t s = 0; s < n_noise; ++s) {
      const double ps = noise.weights[s];
      const Uncertainty& w = noise.points[s];
      const int grid = b.add_variable(0.0, kInf, ps * p.pi_e[tu] * d);
      const int spill = b.add_variable(0.0, kInf, 0.0);
      const int r_bal = b.add_row(w.d_el_net);
      b.set_coefficient(r_bal, grid, 1.0);
      b.set_coefficient(r_bal, spill, -1.0);
      b.set_coefficient(r_bal, charge, -1.0);
      b.set_coefficient(r_bal, discharge, 1.0);
      b.set_coefficient(r_bal, heater, -1.0);
      b.set_coefficient(r_bal, tank, -1.0);

      h_next[s] = b.add_variable(0.0, p.h_max, 0.0);
      const int shortfall = b.add_variable(0.0, kInf, ps * p.pi_hw_deficit * d);
      const int r_tank = b.add_row(-d * w.d_hw);
      b.set_coefficient(r_tank, h_next[s], 1.0);
      b.set_coefficient(r_tank, h_cap, -1.0);
      b.set_coefficient(r_tank, shortfall, -d);

      epi[s] = b.add_variable(-kInf, kInf, ps);
      for (std::size_t c : rank_cuts(next_cuts, active[s], crash_next[s])) {
        const Cut& cut = next_cuts[c];
        const int slack = b.add_variable(0.0, kInf, 0.0);
        const int r_cut = b.add_row(cut.beta);
        b.set_coefficient(r_cut, epi[s], 1.0);
        b.set_coefficient(r_cut, b_next, -cut.lambda[0]);
        b.set_coefficient(r_cut, h_next[s], -cut.lambda[1]);
        b.set_coefficient(r_cut, w_next, -cut.lambda[2]);
        b.set_coefficient(r_cut, i_next, -cut.lambda[3]);
        b.set_coefficient(r_cut, slack, -1.0);
      }
    }

    const lp::LinearProgram problem = b.build();
    const lp::LpSolution sol = solver.solve(problem);
    ++out.stats.rounds;
    out.stats.iterations += sol.iterations;
    out.stats.rows = problem.num_rows();
    out.stats.cols = problem.num_cols();
    if (sol.status != lp::Status::Optimal) {
      throw SolverError("stage problem at t = " + std::to_string(t) + " is " + lp::to_string(sol.status));
    }

    // Add the most violated missing cuts, if any.
    bool added = false;
    for (std::size_t s = 0; s < n_noise; ++s) {
      const State next{sol.x[static_cast<std::size_t>(b_next)], sol.x[static_cast<std::size_t>(h_next[s])],
                       sol.x[static_cast<std::size_t>(w_next)], sol.x[static_cast<std::size_t>(i_next)]};
      const double theta = sol.x[static_cast<std::size_t>(epi[s])];
      const double tol = kCutViolationTol * std::max(1.0, std::abs(theta));
      std::vector<std::pair<double, std::size_t>> violated;
      for (std::size_t c = 0; c < next_cuts.size(); ++c) {
        const double gap = next_cuts[c](next) - theta;
        if (gap > tol && std::find(active[s].begin(), active[s].end(), c) == active[s].end()) {
          violated.emplace_back(-gap, c);
        }
      }
      std::sort(violated.begin(), violated.end());
      for (std::size_t k = 0; k < violated.size() && k < kCutsPerRound; ++k) {
        active[s].push_back(violated[k].second);
        added = true;
      }
    }
    if (added) continue;

    const double fc = sol.x[static_cast<std::size_t>(charge)];
    const double fd = sol.x[static_cast<std::size_t>(discharge)];
    out.control = box.project(netted(fc, fd, sol.x[static_cast<std::size_t>(heater)], sol.x[static_cast<std::size_t>(tank)]));
    out.overlap = std::min(fc, fd);
    out.value = sol.objective;
    for (std::size_t k = 0; k < State::kDim; ++k) out.gradient[k] = sol.duals[static_cast<std::size_t>(pin[k])];
    return out;
  }
}

// Column layout of the horizon problem: the first step has 10 columns, later
// steps add the discomfort pair, then the terminal epigraph and one slack
// per cut.
namespace {

constexpr std::size_t kFirstStepCols = 10;
constexpr std::size_t kStepCols = 12;

std::size_t step_start(std::size_t k) { return k == 0 ? 0 : kFirstStepCols + kStepCols * (k - 1); }

}  // namespace

HorizonSolution solve_horizon_problem(int t, const State& x, std::span<const Uncertainty> forecast,
                                      std::span<const Cut> terminal, const SystemParams& p,
                                      lp::SimplexSolver& solver, std::span<const lp::ColumnStatus> previous) {
  const int horizon = p.horizon_steps - t;
  if (t < 0 || horizon < 1) throw std::out_of_range("solve_horizon_problem: step outside [0, T)");
  if (forecast.size() != static_cast<std::size_t>(horizon)) {
    throw std::invalid_argument("solve_horizon_problem: forecast must cover steps t+1 .. T");
  }
  if (terminal.empty()) throw std::invalid_argument("solve_horizon_problem: no terminal cuts");

  const ControlBox box = admissible_controls(x, p);
  const ThermalCoefficients tc = thermal_coefficients(p);
  const double d = p.delta;
  const auto hu = static_cast<std::size_t>(horizon);

  // Temperatures: theta_k = free_k + sum_{m<k} gain_{k-1-m} * heater_m.
  const double m11 = 1.0 + d * tc.a_ww;
  const double m12 = d * tc.a_wi;
  const double m21 = d * tc.a_iw;
  const double m22 = 1.0 + d * tc.a_ii;
  std::vector<std::array<double, 2>> free_resp(hu + 1);
  std::vector<std::array<double, 2>> gain(hu);
  free_resp[0] = {x.theta_w, x.theta_i};
  for (std::size_t k = 0; k < hu; ++k) {
    const auto exo = thermal_exogenous_rate(p, t + static_cast<int>(k));
    const auto& f = free_resp[k];
    free_resp[k + 1] = {m11 * f[0] + m12 * f[1] + d * exo[0], m21 * f[0] + m22 * f[1] + d * exo[1]};
  }
  gain[0] = {d * tc.g_w, d * tc.g_i};
  for (std::size_t k = 1; k < hu; ++k) {
    const auto& g = gain[k - 1];
    gain[k] = {m11 * g[0] + m12 * g[1], m21 * g[0] + m22 * g[1]};
  }

  lp::LpBuilder b;
  std::vector<int> charge(hu), discharge(hu), heater(hu), tank(hu);
  int b_prev = -1;
  int h_prev = -1;
  std::vector<double> h_crash(hu + 1);
  h_crash[0] = x.h;
  for (std::size_t k = 0; k < hu; ++k) {
    const std::size_t j = static_cast<std::size_t>(t) + k;
    const Uncertainty& w = forecast[k];
    const bool first = k == 0;

    const int grid = b.add_variable(0.0, kInf, p.pi_e[j] * d);
    const int spill = b.add_variable(0.0, kInf, 0.0);
    charge[k] = b.add_variable(0.0, first ? std::max(0.0, box.f_b.hi) : p.f_b_max, 0.0);
    discharge[k] = b.add_variable(0.0, first ? std::max(0.0, -box.f_b.lo) : p.f_b_max, 0.0);
    heater[k] = b.add_variable(0.0, p.f_t_max, 0.0);
    tank[k] = b.add_variable(0.0, first ? box.f_h.hi : p.f_h_max, 0.0);
    const int r_bal = b.add_row(w.d_el_net);
    b.set_coefficient(r_bal, grid, 1.0);
    b.set_coefficient(r_bal, spill, -1.0);
    b.set_coefficient(r_bal, charge[k], -1.0);
    b.set_coefficient(r_bal, discharge[k], 1.0);
    b.set_coefficient(r_bal, heater[k], -1.0);
    b.set_coefficient(r_bal, tank[k], -1.0);

    const int b_next = b.add_variable(p.b_min, p.b_max, 0.0);
    const int r_batt = b.add_row(first ? x.b : 0.0);
    b.set_coefficient(r_batt, b_next, 1.0);
    if (!first) b.set_coefficient(r_batt, b_prev, -1.0);
    b.set_coefficient(r_batt, charge[k], -d * p.rho_c);
    b.set_coefficient(r_batt, discharge[k], d / p.rho_d);

    const int h_cap = b.add_variable(-kInf, p.h_max, 0.0);
    const int r_cap = b.add_row(first ? x.h : 0.0);
    b.set_coefficient(r_cap, h_cap, 1.0);
    if (!first) b.set_coefficient(r_cap, h_prev, -1.0);
    b.set_coefficient(r_cap, tank[k], -d * p.beta_h);

    const int h_next = b.add_variable(0.0, p.h_max, 0.0);
    const int shortfall = b.add_variable(0.0, kInf, p.pi_hw_deficit * d);
    const int r_tank = b.add_row(-d * w.d_hw);
    b.set_coefficient(r_tank, h_next, 1.0);
    b.set_coefficient(r_tank, h_cap, -1.0);
    b.set_coefficient(r_tank, shortfall, -d);
    h_crash[k + 1] = std::max(0.0, std::min(p.h_max, h_crash[k]) - d * w.d_hw);

    if (!first) {
      // Discomfort at the start of step j, driven by heater decisions before it.
      const int disc = b.add_variable(0.0, kInf, p.pi_d[j]);
      const int disc_slack = b.add_variable(0.0, kInf, 0.0);
      const int r_disc = b.add_row(p.theta_set[j] - free_resp[k][1]);
      b.set_coefficient(r_disc, disc, 1.0);
      b.set_coefficient(r_disc, disc_slack, -1.0);
      for (std::size_t m = 0; m < k; ++m) b.set_coefficient(r_disc, heater[m], gain[k - 1 - m][1]);
    }
    b_prev = b_next;
    h_prev = h_next;
  }

  // Terminal epigraph, most binding piece first at the crash point.
  const State crash_end{x.b, h_crash[hu], free_resp[hu][0], free_resp[hu][1]};
  std::vector<std::size_t> order(terminal.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t c) { return terminal[a](crash_end) > terminal[c](crash_end); });
  const int epi = b.add_variable(-kInf, kInf, 1.0);
  for (std::size_t c : order) {
    const Cut& cut = terminal[c];
    const int slack = b.add_variable(0.0, kInf, 0.0);
    const int r_cut = b.add_row(cut.beta + cut.lambda[2] * free_resp[hu][0] + cut.lambda[3] * free_resp[hu][1]);
    b.set_coefficient(r_cut, epi, 1.0);
    b.set_coefficient(r_cut, b_prev, -cut.lambda[0]);
    b.set_coefficient(r_cut, h_prev, -cut.lambda[1]);
    for (std::size_t m = 0; m < hu; ++m) {
      const auto& g = gain[hu - 1 - m];
      b.set_coefficient(r_cut, heater[m], -(cut.lambda[2] * g[0] + cut.lambda[3] * g[1]));
    }
    b.set_coefficient(r_cut, slack, -1.0);
  }

  const lp::LinearProgram problem = b.build();
  const std::size_t cols = static_cast<std::size_t>(problem.num_cols());
  const std::size_t terminal_start = step_start(hu);
  std::vector<lp::ColumnStatus> start;
  if (previous.size() == step_start(hu + 1) + 1 + terminal.size()) {
    start.resize(cols);
    for (std::size_t k = 0; k < hu; ++k) {
      const std::size_t width = k == 0 ? kFirstStepCols : kStepCols;
      std::copy_n(previous.begin() + static_cast<std::ptrdiff_t>(step_start(k + 1)), width,
                  start.begin() + static_cast<std::ptrdiff_t>(step_start(k)));
    }
    const std::size_t old_terminal = step_start(hu + 1);
    start[terminal_start] = previous[old_terminal];
    for (std::size_t i = 0; i < order.size(); ++i) start[terminal_start + 1 + i] = previous[old_terminal + 1 + order[i]];
  }
  const lp::LpSolution sol = solver.solve(problem, start);
  if (sol.status != lp::Status::Optimal) {
    throw SolverError("horizon problem at t = " + std::to_string(t) + " is " + lp::to_string(sol.status));
  }

  HorizonSolution out;
  out.stats = {problem.num_rows(), problem.num_cols(), sol.iterations, 1};
  const auto tu = static_cast<std::size_t>(t);
  out.objective = sol.objective + p.pi_d[tu] * std::max(0.0, p.theta_set[tu] - x.theta_i);
  out.plan.resize(hu);
  for (std::size_t k = 0; k < hu; ++k) {
    out.plan[k] = netted(sol.x[static_cast<std::size_t>(charge[k])], sol.x[static_cast<std::size_t>(discharge[k])],
                         sol.x[static_cast<std::size_t>(heater[k])], sol.x[static_cast<std::size_t>(tank[k])]);
  }
  out.control = box.project(out.plan[0]);
  out.basis = sol.columns;
  for (std::size_t i = 0; i < order.size(); ++i) out.basis[terminal_start + 1 + order[i]] = sol.columns[terminal_start + 1 + i];
  return out;
}

}  // namespace microgrid
