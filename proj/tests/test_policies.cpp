#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "microgrid/errors.hpp"
#include "microgrid/policies.hpp"
#include "microgrid/rng.hpp"
#include "microgrid/stage_problem.hpp"
#include "oracles.hpp"

using namespace microgrid;

namespace {

struct Rollout {
  double cost = 0.0;
  std::vector<Control> controls;
};

Rollout simulate(Policy& policy, const Scenario& w, const State& x0, const SystemParams& p) {
  policy.reset();
  Rollout run;
  State x = x0;
  for (int t = 0; t < p.horizon_steps; ++t) {
    const auto tu = static_cast<std::size_t>(t);
    const Control u = policy.decide(t, x, w[tu]).control;
    EXPECT_TRUE(admissible_controls(x, p).contains(u, 0.0)) << "t=" << t;
    run.controls.push_back(u);
    run.cost += stage_cost(t, x, u, w[tu + 1], p);
    x = step(t, x, u, w[tu + 1], p);
    check_state(x, p);
  }
  run.cost += terminal_cost(x, x0, p.kappa);
  return run;
}

using oracle::battery_only;
using oracle::policy_value;
using oracle::random_state;
using oracle::same_law;
using oracle::two_point;

double tree_value(const SystemParams& p, int t0, const State& x, const State& x0, const DiscreteDistribution& law) {
  const auto v = oracle::tree_value(p, t0, x, x0, law);
  EXPECT_TRUE(v.has_value());
  return v.value_or(std::nan(""));
}

SystemParams summer_params() {
  SystemParams p = default_system_params();
  p.theta_o.assign(p.theta_o.size(), 14.1);
  return p;
}

GeneratorConfig summer_generator() {
  GeneratorConfig g;
  g.pv_daily_kwh = 23.3;
  return g;
}

const State kStart{2.0, 3.0, 17.0, 19.0};

}  // namespace

// ---------------------------------------------------------------------------
// Value functions

TEST(EvaluateVf, SingleZeroCutIsZero) {
  const ValueFunctions vf = ValueFunctions::initial(3, kStart, 1.0);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(evaluate_vf(vf, 1, random_state(rng, default_system_params())), 0.0);
  }
  EXPECT_THROW(evaluate_vf(vf, 4, kStart), std::out_of_range);
}

TEST(EvaluateVf, MaxOfTwoAffine) {
  ValueFunctions vf;
  vf.cuts = {{Cut{{1.0, 0.0, 0.0, 0.0}, 0.0}, Cut{{-1.0, 0.0, 0.0, 0.0}, 2.0}}, {Cut{}}};
  EXPECT_DOUBLE_EQ(evaluate_vf(vf, 0, {0.5, 0.0, 0.0, 0.0}), 1.5);
  EXPECT_DOUBLE_EQ(evaluate_vf(vf, 0, {3.0, 0.0, 0.0, 0.0}), 3.0);
}

TEST(EvaluateVf, AddingCutsNeverLowersTheValue) {
  Rng rng(4);
  ValueFunctions vf = ValueFunctions::initial(1, kStart, 1.0);
  const SystemParams p = default_system_params();
  std::vector<State> states;
  for (int i = 0; i < 100; ++i) states.push_back(random_state(rng, p));
  for (int k = 0; k < 30; ++k) {
    std::vector<double> before;
    for (const State& x : states) before.push_back(evaluate_vf(vf, 0, x));
    vf.cuts[0].push_back(Cut{{rng.normal(), rng.normal(), rng.normal(), rng.normal()}, rng.normal(0.0, 10.0)});
    for (std::size_t i = 0; i < states.size(); ++i) EXPECT_GE(evaluate_vf(vf, 0, states[i]), before[i]);
  }
}

TEST(TerminalCuts, ReproduceTerminalCost) {
  Rng rng(8);
  const SystemParams p = default_system_params();
  const auto cuts = terminal_cuts(kStart, 1.7);
  ValueFunctions vf = ValueFunctions::initial(2, kStart, 1.7);
  for (int i = 0; i < 200; ++i) {
    const State x = random_state(rng, p);
    EXPECT_NEAR(evaluate_vf(vf, 2, x), terminal_cost(x, kStart, 1.7), 1e-12);
  }
  EXPECT_EQ(cuts.size(), 4u);
}

TEST(CutsJson, RoundTripIsExact) {
  Rng rng(12);
  ValueFunctions vf = ValueFunctions::initial(3, kStart, 1.0);
  for (auto& stage : vf.cuts) {
    for (int k = 0; k < 3; ++k) {
      stage.push_back(Cut{{rng.normal(), rng.normal() * 1e-9, rng.normal() * 1e7, rng.normal()}, rng.normal()});
    }
  }
  std::stringstream io;
  write_cuts(io, vf);
  const ValueFunctions back = read_cuts(io);
  ASSERT_EQ(back.cuts.size(), vf.cuts.size());
  for (std::size_t t = 0; t < vf.cuts.size(); ++t) {
    ASSERT_EQ(back.cuts[t].size(), vf.cuts[t].size());
    for (std::size_t k = 0; k < vf.cuts[t].size(); ++k) {
      EXPECT_EQ(back.cuts[t][k].lambda, vf.cuts[t][k].lambda);
      EXPECT_EQ(back.cuts[t][k].beta, vf.cuts[t][k].beta);
    }
  }
}

TEST(CutsJson, RejectsMalformedDocuments) {
  std::istringstream short_lambda(R"([[{"lambda": [1, 2], "beta": 0}], [{"lambda": [0,0,0,0], "beta": 0}]])");
  EXPECT_THROW(read_cuts(short_lambda), ParseError);
  std::istringstream empty_stage(R"([[], [{"lambda": [0,0,0,0], "beta": 0}]])");
  EXPECT_THROW(read_cuts(empty_stage), ParseError);
  std::istringstream garbage("not json");
  EXPECT_THROW(read_cuts(garbage), ParseError);
}

// ---------------------------------------------------------------------------
// Heuristic

TEST(Heuristic, ChargesOnSurplus) {
  const SystemParams p = default_system_params();
  const State x{(p.b_min + p.b_max) / 2.0, 3.0, 18.0, 21.0};
  const auto d = heuristic_decide(10, x, {-1.0, 0.0}, p, {1.0, 3.0}, false);
  EXPECT_DOUBLE_EQ(d.control.f_b, 1.0);
}

TEST(Heuristic, DischargesOnDeficitWithinBounds) {
  const SystemParams p = default_system_params();
  const State x{p.b_min + 0.1, 3.0, 18.0, 21.0};
  const auto d = heuristic_decide(10, x, {2.0, 0.0}, p, {1.0, 3.0}, false);
  EXPECT_DOUBLE_EQ(d.control.f_b, -p.rho_d * 0.1 / p.delta);
  const State full{p.b_max, 3.0, 18.0, 21.0};
  EXPECT_DOUBLE_EQ(heuristic_decide(10, full, {0.5, 0.0}, p, {1.0, 3.0}, false).control.f_b, -0.5);
}

TEST(Heuristic, FullBatteryCannotCharge) {
  const SystemParams p = default_system_params();
  const State x{p.b_max, 3.0, 18.0, 21.0};
  EXPECT_EQ(heuristic_decide(10, x, {-2.0, 0.0}, p, {1.0, 3.0}, false).control.f_b, 0.0);
}

TEST(Heuristic, HeaterBelowSetpoint) {
  const SystemParams p = default_system_params();
  const State x{2.0, 3.0, 18.0, p.theta_set[40] - 1.0};
  EXPECT_EQ(heuristic_decide(40, x, {}, p, {1.0, 3.0}, false).control.f_t, p.f_t_max);
}

TEST(Heuristic, HeaterHysteresis) {
  const SystemParams p = default_system_params();
  const double set = p.theta_set[40];
  HeuristicPolicy h(p, {1.0, 3.0});
  EXPECT_EQ(h.decide(40, {2.0, 3.0, 18.0, set - 0.5}, {}).control.f_t, p.f_t_max);
  EXPECT_EQ(h.decide(40, {2.0, 3.0, 18.0, set + 0.5}, {}).control.f_t, p.f_t_max);  // still on
  EXPECT_EQ(h.decide(40, {2.0, 3.0, 18.0, set + 1.5}, {}).control.f_t, 0.0);
  EXPECT_EQ(h.decide(40, {2.0, 3.0, 18.0, set + 0.5}, {}).control.f_t, 0.0);  // still off
  h.decide(40, {2.0, 3.0, 18.0, set - 0.5}, {});
  h.reset();
  EXPECT_EQ(h.decide(40, {2.0, 3.0, 18.0, set + 0.5}, {}).control.f_t, 0.0);
}

TEST(Heuristic, TankHeatsBelowTarget) {
  const SystemParams p = default_system_params();
  const State low{2.0, 1.0, 18.0, 21.0};
  const State high{2.0, 3.5, 18.0, 21.0};
  EXPECT_EQ(heuristic_decide(10, low, {}, p, {1.0, 3.0}, false).control.f_h, admissible_controls(low, p).f_h.hi);
  EXPECT_EQ(heuristic_decide(10, high, {}, p, {1.0, 3.0}, false).control.f_h, 0.0);
}

// ---------------------------------------------------------------------------
// MPC

TEST(Mpc, NothingToDoOnTheLastStep) {
  SystemParams p = default_system_params();
  const int t = p.horizon_steps - 1;
  const State x{kStart.b, kStart.h, 22.0, 23.0};
  lp::SimplexSolver solver;
  const std::vector<Uncertainty> forecast{{0.0, 0.0}};
  const auto d = mpc_decide(t, x, forecast, p, terminal_cuts(kStart, p.kappa), solver);
  EXPECT_EQ(d.control, Control{});
  EXPECT_NEAR(d.predicted_cost, 0.0, 1e-12);
}

TEST(Mpc, SingleStepForcedDemand) {
  SystemParams p = default_system_params();
  const int t = p.horizon_steps - 1;
  const State empty{p.b_min, 0.0, 22.0, 23.0};
  lp::SimplexSolver solver;
  const std::vector<Uncertainty> forecast{{1.7, 0.0}};
  const auto d = mpc_decide(t, empty, forecast, p, terminal_cuts(empty, p.kappa), solver);
  EXPECT_NEAR(d.control.f_b, 0.0, 1e-12);
  EXPECT_NEAR(d.control.f_t, 0.0, 1e-12);
  EXPECT_NEAR(d.control.f_h, 0.0, 1e-12);
  EXPECT_NEAR(d.predicted_cost, p.pi_e[static_cast<std::size_t>(t)] * p.delta * 1.7, 1e-12);
}

TEST(Mpc, RejectsWrongForecastLength) {
  const SystemParams p = default_system_params();
  lp::SimplexSolver solver;
  const std::vector<Uncertainty> forecast(3);
  EXPECT_ANY_THROW(mpc_decide(0, kStart, forecast, p, terminal_cuts(kStart, p.kappa), solver));
}

TEST(Mpc, FiveStepPlanBeatsEveryGridPolicy) {
  // Battery levels on a grid, heater off/half/full, no tank.
  SystemParams p = default_system_params(5, 0.5);
  p.f_h_max = 0.0;
  p.theta_o.assign(p.theta_o.size(), 5.0);
  p.theta_set.assign(p.theta_set.size(), 19.0);
  p.pi_d.assign(p.pi_d.size(), 0.2);
  p.pi_e = {0.1, 0.3, 0.15, 0.3, 0.2, 0.2};
  const State x0{1.5, 0.0, 17.0, 18.5};
  const std::vector<Uncertainty> w{{0, 0}, {0.8, 0}, {-1.2, 0}, {1.5, 0}, {0.4, 0}, {1.0, 0}};

  lp::SimplexSolver solver;
  const HorizonSolution sol =
      solve_horizon_problem(0, x0, std::span(w).subspan(1), terminal_cuts(x0, p.kappa), p, solver);

  // The LP plan, replayed through the simulator, realizes its objective.
  State x = x0;
  double realized = 0.0;
  for (int t = 0; t < 5; ++t) {
    const Control u = admissible_controls(x, p).project(sol.plan[static_cast<std::size_t>(t)]);
    realized += stage_cost(t, x, u, w[static_cast<std::size_t>(t) + 1], p);
    x = step(t, x, u, w[static_cast<std::size_t>(t) + 1], p);
  }
  realized += terminal_cost(x, x0, p.kappa);
  EXPECT_NEAR(realized, sol.objective, 1e-9);

  // Exhaustive search: heater on a grid, battery at its bounds, idle, or
  // absorbing exactly the net surplus of the step.
  auto grid_best = [&](int levels) {
    std::vector<double> heater;
    for (int i = 0; i < levels; ++i) heater.push_back(p.f_t_max * i / (levels - 1));
    double best = 1e300;
    std::function<void(int, const State&, double)> search = [&](int t, const State& xs, double acc) {
      if (t == 5) {
        best = std::min(best, acc + terminal_cost(xs, x0, p.kappa));
        return;
      }
      const auto tu = static_cast<std::size_t>(t);
      const ControlBox box = admissible_controls(xs, p);
      for (double ft : heater) {
        std::vector<double> fbs{box.f_b.lo, box.f_b.hi, 0.0, box.f_b.clamp(-(w[tu + 1].d_el_net + ft))};
        std::sort(fbs.begin(), fbs.end());
        fbs.erase(std::unique(fbs.begin(), fbs.end()), fbs.end());
        for (double fb : fbs) {
          const Control u{fb, ft, 0.0};
          search(t + 1, step(t, xs, u, w[tu + 1], p), acc + stage_cost(t, xs, u, w[tu + 1], p));
        }
      }
    };
    search(0, x0, 0.0);
    return best;
  };
  const double coarse = grid_best(5);
  const double fine = grid_best(9);
  EXPECT_LE(sol.objective, fine + 1e-9);
  EXPECT_LE(fine, coarse + 1e-12);
  // Rounding the heater up to the grid costs at most one grid step of energy per period.
  double resolution = 0.0;
  for (int t = 0; t < 5; ++t) resolution += p.pi_e[static_cast<std::size_t>(t)] * p.delta * p.f_t_max / 8.0;
  EXPECT_LE(fine - sol.objective, resolution);
}

TEST(Mpc, PerfectForesightMatchesFullHorizonPlan) {
  const SystemParams p = summer_params();
  const ScenarioSet set = generate_scenarios(summer_generator(), 2, 31);
  const double pf = perfect_foresight_cost(set.data[0], kStart, p);
  lp::SimplexSolver solver;
  const auto d = mpc_decide(0, kStart, std::span(set.data[0]).subspan(1), p, terminal_cuts(kStart, p.kappa), solver);
  EXPECT_DOUBLE_EQ(pf, d.predicted_cost);
}

TEST(Mpc, ShiftedBasisGivesTheColdOptimum) {
  const SystemParams p = summer_params();
  const ScenarioSet set = generate_scenarios(summer_generator(), 1, 5);
  const Scenario& w = set.data[0];
  const auto terminal = terminal_cuts(kStart, p.kappa);
  lp::SimplexSolver cold_solver;
  lp::SimplexSolver warm_solver;
  State x = kStart;
  std::vector<lp::ColumnStatus> basis;
  int cold_iterations = 0;
  int warm_iterations = 0;
  for (int t = 0; t < p.horizon_steps; ++t) {
    const auto tu = static_cast<std::size_t>(t);
    const auto forecast = std::span(w).subspan(tu + 1);
    const HorizonSolution cold = solve_horizon_problem(t, x, forecast, terminal, p, cold_solver);
    const HorizonSolution warm = solve_horizon_problem(t, x, forecast, terminal, p, warm_solver, basis);
    EXPECT_NEAR(warm.objective, cold.objective, 1e-7 * std::max(1.0, std::abs(cold.objective))) << "t=" << t;
    cold_iterations += cold.stats.iterations;
    warm_iterations += warm.stats.iterations;
    basis = warm.basis;
    // Drift away from the plan so the next start is not already optimal.
    Control u = warm.control;
    u.f_t = admissible_controls(x, p).f_t.clamp(0.5 * u.f_t);
    x = step(t, x, u, w[tu + 1], p);
  }
  EXPECT_LT(2 * warm_iterations, cold_iterations);
}

TEST(MpcPolicy, RequiresMatchingHorizon) {
  const OptimizationScenarios opt(generate_scenarios(GeneratorConfig{}, 5, 1));
  EXPECT_THROW(MpcPolicy(default_system_params(48, 0.5), opt, kStart), ValidationError);
}

// ---------------------------------------------------------------------------
// SDDP

TEST(Sddp, ZeroCostProblemHasZeroCuts) {
  // Nothing to buy: no demand, no comfort target, stocks start at their minimum.
  SystemParams p = default_system_params(8, 0.25);
  p.theta_set.assign(p.theta_set.size(), -100.0);
  const State x0{p.b_min, 0.0, 15.0, 18.0};
  const auto dists = same_law(DiscreteDistribution::dirac({0.0, 0.0}), 8);
  const TrainingResult r = sddp_train(p, dists, x0, {5, 0.0, 0}, 3);
  Rng rng(2);
  for (int t = 0; t <= 8; ++t) {
    for (int i = 0; i < 20; ++i) EXPECT_NEAR(evaluate_vf(r.vf, t, random_state(rng, p)), 0.0, 1e-12);
  }
}

TEST(Sddp, DeterministicLawConvergesToPerfectForesight) {
  const SystemParams full = summer_params();
  SystemParams p = default_system_params(8, 0.25);
  // Evening slice of a generated day: heater, battery and tank all matter.
  const std::size_t offset = 72;
  const Scenario day = generate_scenarios(GeneratorConfig{}, 1, 17).data[0];
  for (std::size_t k = 0; k <= 8; ++k) {
    p.theta_o[k] = 4.0;
    p.pi_e[k] = full.pi_e[offset + k];
    p.theta_set[k] = full.theta_set[offset + k];
  }
  Scenario w(day.begin() + offset, day.begin() + offset + 9);
  StageDistributions dists;
  for (std::size_t k = 1; k <= 8; ++k) {
    dists.stages.push_back(DiscreteDistribution::dirac(w[k]));
    dists.reduced.push_back(true);
  }
  const State x0{2.0, 2.5, 16.0, 18.0};
  const TrainingResult r = sddp_train(p, dists, x0, {300, 1e-12, 5}, 1);
  const double exact = perfect_foresight_cost(w, x0, p);
  EXPECT_NEAR(r.log.iterations.back().lower_bound, exact, 1e-7);
  EXPECT_NEAR(r.log.iterations.back().forward_cost, exact, 1e-7);
}

class BatteryTree : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    p_ = new SystemParams(battery_only(5, 1.0));
    result_ = new TrainingResult(sddp_train(*p_, same_law(two_point(), 5), kX0, {400, 1e-12, 20}, 11));
  }
  static void TearDownTestSuite() {
    delete p_;
    delete result_;
  }
  static constexpr State kX0{2.0, 0.0, 20.0, 20.0};
  static SystemParams* p_;
  static TrainingResult* result_;
};

SystemParams* BatteryTree::p_ = nullptr;
TrainingResult* BatteryTree::result_ = nullptr;

TEST_F(BatteryTree, LowerBoundMatchesTreeOptimum) {
  const double exact = tree_value(*p_, 0, kX0, kX0, two_point());
  EXPECT_NEAR(result_->log.iterations.back().lower_bound, exact, 1e-6);
  EXPECT_NEAR(evaluate_vf(result_->vf, 0, kX0), exact, 1e-6);
}

TEST_F(BatteryTree, PolicyExpectedCostMatchesTreeOptimum) {
  const double exact = tree_value(*p_, 0, kX0, kX0, two_point());
  SddpPolicy policy(*p_, std::make_shared<const ValueFunctions>(result_->vf),
                    std::make_shared<const StageDistributions>(same_law(two_point(), 5)));
  EXPECT_NEAR(policy_value(policy, 0, kX0, kX0, two_point(), *p_), exact, 1e-6);
}

TEST_F(BatteryTree, CutsStayBelowExactValues) {
  Rng rng(50);
  for (int i = 0; i < 50; ++i) {
    const State x = random_state(rng, *p_);
    for (int t = 0; t <= p_->horizon_steps; ++t) {
      EXPECT_LE(evaluate_vf(result_->vf, t, x), tree_value(*p_, t, x, kX0, two_point()) + 1e-6)
          << "t=" << t << " b=" << x.b;
    }
  }
}

TEST_F(BatteryTree, LowerBoundNeverDecreases) {
  const auto& its = result_->log.iterations;
  for (std::size_t k = 1; k < its.size(); ++k) EXPECT_GE(its[k].lower_bound, its[k - 1].lower_bound - 1e-7);
}

TEST(Sddp, LowerBoundMonotoneOnGeneratedData) {
  const SystemParams p = summer_params();
  const OptimizationScenarios opt(generate_scenarios(summer_generator(), 50, 2));
  const auto dists = quantize_stagewise(opt, {5, 1e-6, 100, 2});
  const TrainingResult r = sddp_train(p, dists, kStart, {15, 0.0, 0}, 4);
  ASSERT_EQ(r.log.iterations.size(), 15u);
  for (std::size_t k = 1; k < r.log.iterations.size(); ++k) {
    EXPECT_GE(r.log.iterations[k].lower_bound, r.log.iterations[k - 1].lower_bound - 1e-7);
  }
  std::ostringstream csv;
  r.log.write_csv(csv);
  EXPECT_EQ(csv.str().substr(0, 45), "iteration,lower_bound,forward_cost,cuts,secon");
}

TEST(Sddp, TrainingIsDeterministicGivenSeed) {
  const SystemParams p = summer_params();
  const OptimizationScenarios opt(generate_scenarios(summer_generator(), 20, 2));
  const auto dists = quantize_stagewise(opt, {4, 1e-6, 100, 2});
  const TrainingResult a = sddp_train(p, dists, kStart, {3, 0.0, 0}, 9);
  const TrainingResult b = sddp_train(p, dists, kStart, {3, 0.0, 0}, 9);
  std::ostringstream ja, jb;
  write_cuts(ja, a.vf);
  write_cuts(jb, b.vf);
  EXPECT_EQ(ja.str(), jb.str());
}

TEST(Sddp, StoppingRuleEndsOnStall) {
  SystemParams p = default_system_params(4, 0.25);
  p.theta_set.assign(p.theta_set.size(), -100.0);
  const State x0{p.b_min, 0.0, 15.0, 18.0};
  const auto r = sddp_train(p, same_law(DiscreteDistribution::dirac({0.0, 0.0}), 4), x0, {100, 1e-4, 3}, 1);
  EXPECT_EQ(r.log.iterations.size(), 3u);
}

TEST(Sddp, RejectsMismatchedDistributions) {
  const SystemParams p = default_system_params(4, 0.25);
  EXPECT_THROW(sddp_train(p, same_law(two_point(), 3), kStart, {}, 0), ValidationError);
}

TEST(SddpDecide, OnePointMatchesOneStepHorizonProblem) {
  const SystemParams p = summer_params();
  const int t = p.horizon_steps - 1;
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    ValueFunctions vf = ValueFunctions::initial(p.horizon_steps, kStart, p.kappa);
    for (int k = 0; k < 5; ++k) {
      vf.cuts.back().push_back(Cut{{-rng.uniform(0.0, 0.5), -rng.uniform(0.0, 0.5), rng.normal(0.0, 0.05),
                                    -rng.uniform(0.0, 0.2)},
                                   rng.uniform(0.0, 8.0)});
    }
    const State x = random_state(rng, p);
    const Uncertainty w{rng.uniform(-2.0, 3.0), rng.uniform(0.0, 4.0)};
    lp::SimplexSolver s1, s2;
    const auto a = sddp_decide(t, x, vf, DiscreteDistribution::dirac(w), p, s1);
    const std::vector<Uncertainty> forecast{w};
    const auto b = mpc_decide(t, x, forecast, p, vf.cuts.back(), s2);
    EXPECT_NEAR(a.predicted_cost, b.predicted_cost, 1e-9) << "trial " << trial;
  }
}

TEST(SddpDecide, ZeroCutsGiveTheMyopicDecision) {
  const SystemParams p = summer_params();
  ValueFunctions vf = ValueFunctions::initial(p.horizon_steps, kStart, p.kappa);
  lp::SimplexSolver solver;
  // Morning deficit with a charged battery: discharge as much as needed.
  const State x{2.5, 3.0, 18.0, 22.0};
  const auto d = sddp_decide(30, x, vf, DiscreteDistribution::dirac({1.0, 0.0}), p, solver);
  EXPECT_NEAR(d.control.f_b, -1.0, 1e-9);
  EXPECT_NEAR(d.control.f_t, 0.0, 1e-9);
  EXPECT_NEAR(d.control.f_h, 0.0, 1e-9);
  EXPECT_NEAR(d.predicted_cost, 0.0, 1e-9);
}

// ---------------------------------------------------------------------------
// Properties across the three controllers

class Controllers : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    p_ = new SystemParams(summer_params());
    const ScenarioSet all = generate_scenarios(summer_generator(), 60, 5);
    ScenarioSet opt_set, assess_set;
    for (std::size_t i = 0; i < all.size(); ++i) (i < 50 ? opt_set : assess_set).data.push_back(all.data[i]);
    opt_ = new OptimizationScenarios(opt_set);
    assess_ = new AssessmentScenarios(assess_set);
    const auto dists = std::make_shared<const StageDistributions>(quantize_stagewise(*opt_, {10, 1e-6, 100, 1}));
    const auto tr = sddp_train(*p_, *dists, kStart, {20, 0.0, 0}, 3);
    vf_ = new std::shared_ptr<const ValueFunctions>(std::make_shared<const ValueFunctions>(tr.vf));
    dists_ = new std::shared_ptr<const StageDistributions>(dists);
  }
  static void TearDownTestSuite() {
    delete p_;
    delete opt_;
    delete assess_;
    delete vf_;
    delete dists_;
  }
  static std::vector<std::unique_ptr<Policy>> policies() {
    std::vector<std::unique_ptr<Policy>> out;
    out.push_back(std::make_unique<HeuristicPolicy>(*p_, HeuristicParams{1.0, kStart.h}));
    out.push_back(std::make_unique<MpcPolicy>(*p_, *opt_, kStart));
    out.push_back(std::make_unique<SddpPolicy>(*p_, *vf_, *dists_));
    return out;
  }
  static SystemParams* p_;
  static OptimizationScenarios* opt_;
  static AssessmentScenarios* assess_;
  static std::shared_ptr<const ValueFunctions>* vf_;
  static std::shared_ptr<const StageDistributions>* dists_;
};

SystemParams* Controllers::p_ = nullptr;
OptimizationScenarios* Controllers::opt_ = nullptr;
AssessmentScenarios* Controllers::assess_ = nullptr;
std::shared_ptr<const ValueFunctions>* Controllers::vf_ = nullptr;
std::shared_ptr<const StageDistributions>* Controllers::dists_ = nullptr;

TEST_F(Controllers, PerfectForesightIsALowerBound) {
  auto pols = policies();
  for (std::size_t s = 0; s < 5; ++s) {
    const double pf = perfect_foresight_cost((*assess_)[s], kStart, *p_);
    for (auto& pol : pols) {
      EXPECT_GE(simulate(*pol, (*assess_)[s], kStart, *p_).cost, pf - 1e-6) << pol->name() << " scenario " << s;
    }
  }
}

TEST_F(Controllers, DecisionsDependOnlyOnThePast) {
  Scenario a = (*assess_)[0];
  const Scenario& other = (*assess_)[1];
  for (std::size_t cut : {0u, 30u, 70u}) {
    Scenario b = other;
    for (std::size_t k = 0; k <= cut; ++k) b[k] = a[k];
    for (auto& pol : policies()) {
      const Rollout ra = simulate(*pol, a, kStart, *p_);
      const Rollout rb = simulate(*pol, b, kStart, *p_);
      for (std::size_t k = 0; k <= cut; ++k) {
        EXPECT_EQ(ra.controls[k], rb.controls[k]) << pol->name() << " step " << k;
      }
    }
  }
}

TEST_F(Controllers, DecisionsStayAdmissibleOnRandomStates) {
  Rng rng(1000);
  auto pols = policies();
  for (int i = 0; i < 1000; ++i) {
    const State x = random_state(rng, *p_);
    const int t = static_cast<int>(rng.index(static_cast<std::size_t>(p_->horizon_steps)));
    const Uncertainty w{rng.uniform(-3.0, 3.0), rng.uniform(0.0, 3.0)};
    const ControlBox box = admissible_controls(x, *p_);
    for (auto& pol : pols) {
      if (pol->name() == "mpc" && i % 10 != 0) continue;  // slower; a sample suffices
      EXPECT_TRUE(box.contains(pol->decide(t, x, w).control, 0.0)) << pol->name() << " state " << i;
    }
  }
}

TEST_F(Controllers, ClonesDecideLikeTheOriginal) {
  for (auto& pol : policies()) {
    auto copy = pol->clone();
    EXPECT_EQ(copy->name(), pol->name());
    const Rollout a = simulate(*pol, (*assess_)[2], kStart, *p_);
    const Rollout b = simulate(*copy, (*assess_)[2], kStart, *p_);
    EXPECT_EQ(a.cost, b.cost) << pol->name();
  }
}

TEST_F(Controllers, OptimizersBeatTheHeuristicOnAverage) {
  auto pols = policies();
  std::vector<double> mean(3, 0.0);
  for (std::size_t s = 0; s < assess_->size(); ++s) {
    for (std::size_t k = 0; k < 3; ++k) mean[k] += simulate(*pols[k], (*assess_)[s], kStart, *p_).cost;
  }
  EXPECT_LT(mean[1], mean[0]);
  EXPECT_LT(mean[2], mean[0]);
}
