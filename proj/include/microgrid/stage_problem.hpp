#pragma once

// The two linear programs behind the optimizing controllers.
//
// Stage problem (SDDP): one decision u shared by S noise outcomes, each with
// its own recourse, next state and epigraph variable bounded below by the
// next stage's cuts. The incoming state is pinned by equality rows whose
// duals form the cut slope.
//
// Horizon problem (MPC): deterministic multi-period LP from step t to T
// driven by a forecast, closed by terminal cuts. Temperatures are linear in
// the heater decisions and are substituted out.
//
// Both models price unserved hot water and let the tank level stop at zero,
// which keeps every instance feasible.

#include <span>
#include <vector>

#include "microgrid/cuts.hpp"
#include "microgrid/lp.hpp"
#include "microgrid/model.hpp"
#include "microgrid/quantization.hpp"

namespace microgrid {

struct LpStats {
  int rows = 0;
  int cols = 0;
  int iterations = 0;
  int rounds = 1;  ///< solves needed by the lazy cut loop
};

struct StageSolution {
  Control control;      ///< netted battery flow, projected on admissible_controls(x)
  double value = 0.0;   ///< expected stage cost plus expected cut value
  std::array<double, State::kDim> gradient{};  ///< d value / d x
  double overlap = 0.0;  ///< min(charge, discharge) in the LP optimum
  LpStats stats;
};

/// Solves the stage-t problem at x. `noise` is the law of w_{t+1} and
/// `next_cuts` the cuts of stage t+1. Cuts enter the LP lazily: only those
/// active or violated at the current optimum are added, which leaves the
/// optimum and the pinned-row duals unchanged. Throws SolverError if the LP
/// is not solved to optimality.
StageSolution solve_stage_problem(int t, const State& x, const DiscreteDistribution& noise,
                                  std::span<const Cut> next_cuts, const SystemParams& p,
                                  lp::SimplexSolver& solver);

struct HorizonSolution {
  Control control;        ///< first decision, netted and projected
  double objective = 0.0; ///< optimal cost of steps t..T-1 plus terminal value
  std::vector<Control> plan;
  LpStats stats;
  std::vector<lp::ColumnStatus> basis;  ///< final LP basis, terminal slacks in cut order
};

/// `forecast[k]` is the noise w_{t+1+k}; its length must be T - t.
/// `previous` may hold the basis of the problem solved at t - 1 with the same
/// terminal cuts; shifted by one step it seeds the LP start. Anything else
/// is ignored.
HorizonSolution solve_horizon_problem(int t, const State& x, std::span<const Uncertainty> forecast,
                                      std::span<const Cut> terminal, const SystemParams& p,
                                      lp::SimplexSolver& solver, std::span<const lp::ColumnStatus> previous = {});

}  // namespace microgrid
