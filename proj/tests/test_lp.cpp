#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "microgrid/lp.hpp"
#include "oracles.hpp"

using namespace microgrid::lp;
using microgrid::oracle::RandomLp;
using microgrid::oracle::random_lp;
using microgrid::oracle::vertex_enumeration;

namespace {

void expect_optimality_conditions(const LinearProgram& lp, const LpSolution& sol) {
  ASSERT_EQ(sol.status, Status::Optimal);
  const int m = lp.num_rows();
  const int n = lp.num_cols();
  std::vector<double> residual(lp.rhs().begin(), lp.rhs().end());
  for (int j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    EXPECT_GE(sol.x[ju], lp.lower()[ju] - 1e-8);
    EXPECT_LE(sol.x[ju], lp.upper()[ju] + 1e-8);
    for (const Entry& e : lp.column(j)) residual[static_cast<std::size_t>(e.row)] -= e.value * sol.x[ju];
  }
  for (int i = 0; i < m; ++i) EXPECT_NEAR(residual[static_cast<std::size_t>(i)], 0.0, 1e-8);

  // Dual feasibility and strong duality with bound terms.
  double dual_obj = 0.0;
  for (int i = 0; i < m; ++i) dual_obj += lp.rhs()[static_cast<std::size_t>(i)] * sol.duals[static_cast<std::size_t>(i)];
  for (int j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const double d = sol.reduced_costs[ju];
    const double x = sol.x[ju];
    const bool at_lower = std::abs(x - lp.lower()[ju]) <= 1e-8;
    const bool at_upper = std::abs(x - lp.upper()[ju]) <= 1e-8;
    if (!at_lower) {
      EXPECT_LE(d, 1e-8) << "column " << j;
    }
    if (!at_upper) {
      EXPECT_GE(d, -1e-8) << "column " << j;
    }
    dual_obj += d * x;
  }
  EXPECT_NEAR(sol.objective, dual_obj, 1e-7);
}

}  // namespace

TEST(Lp, BoundActiveOptimum) {
  LinearProgram lp({-1.0}, {}, {}, {0.0}, {1.0});
  const LpSolution sol = solve(lp);
  ASSERT_EQ(sol.status, Status::Optimal);
  EXPECT_DOUBLE_EQ(sol.x[0], 1.0);
  EXPECT_DOUBLE_EQ(sol.objective, -1.0);
}

TEST(Lp, SimpleEqualityDual) {
  LinearProgram lp({1.0, 1.0}, {{1.0, 1.0}}, {1.0}, {0.0, 0.0}, {kInf, kInf});
  const LpSolution sol = solve(lp);
  ASSERT_EQ(sol.status, Status::Optimal);
  EXPECT_NEAR(sol.objective, 1.0, 1e-12);
  EXPECT_NEAR(sol.duals[0], 1.0, 1e-12);
  expect_optimality_conditions(lp, sol);
}

TEST(Lp, ContradictoryBoundsAreInfeasible) {
  LinearProgram lp({0.0}, {{1.0}}, {2.0}, {0.0}, {1.0});
  EXPECT_EQ(solve(lp).status, Status::Infeasible);
}

TEST(Lp, UnboundedDetected) {
  LinearProgram lp({-1.0, 0.0}, {{1.0, -1.0}}, {0.0}, {0.0, 0.0}, {kInf, kInf});
  EXPECT_EQ(solve(lp).status, Status::Unbounded);
}

TEST(Lp, FreeVariables) {
  // min |x - 3| written as x - 3 = p - q, p, q >= 0, x free.
  LinearProgram lp({0.0, 1.0, 1.0}, {{1.0, -1.0, 1.0}}, {3.0}, {-kInf, 0.0, 0.0}, {kInf, kInf, kInf});
  const LpSolution sol = solve(lp);
  ASSERT_EQ(sol.status, Status::Optimal);
  EXPECT_NEAR(sol.objective, 0.0, 1e-12);
  EXPECT_NEAR(sol.x[0], 3.0, 1e-12);
}

TEST(Lp, ConstructionRejectsBadInput) {
  EXPECT_THROW(LinearProgram({1.0}, {{1.0, 2.0}}, {1.0}, {0.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(LinearProgram({1.0}, {}, {}, {2.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(LinearProgram({std::nan("")}, {}, {}, {0.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(LinearProgram({1.0}, {{1.0}}, {1.0, 2.0}, {0.0}, {1.0}), std::invalid_argument);
}

TEST(Lp, BuilderSumsDuplicates) {
  LpBuilder b;
  const int x = b.add_variable(0.0, 10.0, 1.0, "x");
  const int r = b.add_row(4.0);
  b.set_coefficient(r, x, 1.0);
  b.set_coefficient(r, x, 1.0);
  const LinearProgram lp = b.build();
  EXPECT_DOUBLE_EQ(lp.coefficient(r, x), 2.0);
  const LpSolution sol = solve(lp);
  EXPECT_NEAR(sol.x[0], 2.0, 1e-12);
  EXPECT_NEAR(sol.duals[0], 0.5, 1e-12);
}

TEST(Lp, WriteTextFormat) {
  LinearProgram lp({1.0, -2.0}, {{1.0, 1.0}}, {1.0}, {0.0, 0.0}, {1.0, kInf}, {"a", "b"});
  std::ostringstream out;
  write_text(out, lp);
  const std::string s = out.str();
  EXPECT_NE(s.find("min + 1 a - 2 b"), std::string::npos);
  EXPECT_NE(s.find("row_0: + 1 a + 1 b = 1"), std::string::npos);
  EXPECT_NE(s.find("bounds: 0 <= a <= 1"), std::string::npos);
}

TEST(ParametricDuals, EpigraphOfPinnedValue) {
  // min y s.t. y - s - x = 0, x = 3 (pinned), s >= 0.
  LinearProgram lp({1.0, 0.0, 0.0}, {{1.0, -1.0, -1.0}, {0.0, 0.0, 1.0}}, {0.0, 3.0}, {-kInf, 0.0, -kInf},
                   {kInf, kInf, kInf});
  const std::vector<int> rows{1};
  const ParametricDuals pd = parametric_duals(lp, rows);
  EXPECT_NEAR(pd.value, 3.0, 1e-12);
  EXPECT_NEAR(pd.gradient[0], 1.0, 1e-12);
}

TEST(ParametricDuals, IndependentObjectiveGivesZero) {
  LinearProgram lp({1.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}}, {1.0, 5.0}, {0.0, -kInf}, {kInf, kInf});
  const std::vector<int> rows{1};
  EXPECT_NEAR(parametric_duals(lp, rows).gradient[0], 0.0, 1e-12);
}

TEST(ParametricDuals, KinkGivesSubgradient) {
  // value(x) = max(x, 2x - 1), pinned at the kink x = 1.
  auto build = [](double pin) {
    return LinearProgram({1.0, 0.0, 0.0, 0.0}, {{1.0, -1.0, 0.0, -1.0}, {1.0, 0.0, -1.0, -2.0}, {0.0, 0.0, 0.0, 1.0}},
                         {0.0, -1.0, pin}, {-kInf, 0.0, 0.0, -kInf}, {kInf, kInf, kInf, kInf});
  };
  const std::vector<int> rows{2};
  const ParametricDuals pd = parametric_duals(build(1.0), rows);
  EXPECT_NEAR(pd.value, 1.0, 1e-12);
  EXPECT_GE(pd.gradient[0], 1.0 - 1e-12);
  EXPECT_LE(pd.gradient[0], 2.0 + 1e-12);
  for (double d : {-0.1, 0.1}) {
    const double v = solve(build(1.0 + d)).objective;
    EXPECT_GE(v, pd.value + pd.gradient[0] * d - 1e-9);
  }
}

TEST(ParametricDuals, RejectsNonOptimal) {
  LinearProgram lp({0.0}, {{1.0}}, {2.0}, {0.0}, {1.0});
  const std::vector<int> rows{0};
  EXPECT_THROW(parametric_duals(lp, rows), std::logic_error);
}

TEST(LpProperty, MatchesVertexEnumeration) {
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<int> n_dist(1, 6);
  int infeasible_seen = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = n_dist(rng);
    const int m = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const bool feasible = trial % 10 != 0 || m == 0;
    const RandomLp data = random_lp(rng, n, m, feasible);
    const LinearProgram lp = data.build();
    const LpSolution sol = solve(lp);
    const auto oracle = vertex_enumeration(data);
    if (!oracle) {
      EXPECT_EQ(sol.status, Status::Infeasible) << "trial " << trial;
      ++infeasible_seen;
      continue;
    }
    ASSERT_EQ(sol.status, Status::Optimal) << "trial " << trial;
    EXPECT_NEAR(sol.objective, *oracle, 1e-7) << "trial " << trial;
    expect_optimality_conditions(lp, sol);
  }
  EXPECT_GT(infeasible_seen, 0);
}

TEST(LpProperty, DualsAreSubgradients) {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 12)(rng);
    const int m = std::uniform_int_distribution<int>(1, std::min(8, n - 1))(rng);
    const RandomLp data = random_lp(rng, n, m, true);
    const LinearProgram lp = data.build();
    const LpSolution base = solve(lp);
    ASSERT_EQ(base.status, Status::Optimal);
    for (int k = 0; k < 20; ++k) {
      std::vector<double> delta(static_cast<std::size_t>(m));
      double norm = 0.0;
      for (double& d : delta) {
        d = unit(rng);
        norm += d * d;
      }
      const double scale = 0.1 * std::abs(unit(rng)) / std::max(1e-12, std::sqrt(norm));
      std::vector<double> rhs = data.rhs;
      double predicted = base.objective;
      for (int i = 0; i < m; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        delta[iu] *= scale;
        rhs[iu] += delta[iu];
        predicted += base.duals[iu] * delta[iu];
      }
      const LpSolution moved = solve(lp.with_rhs(rhs));
      if (moved.status == Status::Infeasible) continue;  // value is +inf
      ASSERT_EQ(moved.status, Status::Optimal);
      EXPECT_GE(moved.objective, predicted - 1e-7);
    }
  }
}

TEST(LpProperty, WarmStartAfterRhsChangeMatchesColdSolve) {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  SimplexSolver warm;
  int warm_faster = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 14)(rng);
    const int m = std::uniform_int_distribution<int>(1, std::min(9, n - 1))(rng);
    const RandomLp data = random_lp(rng, n, m, true);
    const LinearProgram lp = data.build();
    const LpSolution base = solve(lp);
    ASSERT_EQ(base.status, Status::Optimal);
    ASSERT_EQ(base.columns.size(), static_cast<std::size_t>(n));
    std::vector<double> rhs = data.rhs;
    for (double& b : rhs) b += 0.5 * unit(rng);
    const LinearProgram moved = lp.with_rhs(rhs);
    const LpSolution cold = solve(moved);
    const LpSolution hot = warm.solve(moved, base.columns);
    ASSERT_EQ(hot.status, cold.status) << "trial " << trial;
    if (cold.status != Status::Optimal) continue;
    EXPECT_NEAR(hot.objective, cold.objective, 1e-7) << "trial " << trial;
    expect_optimality_conditions(moved, hot);
    if (hot.iterations < cold.iterations) ++warm_faster;
  }
  EXPECT_GT(warm_faster, 0);
}

TEST(LpProperty, AnyStartGivesTheOptimum) {
  std::mt19937_64 rng(99);
  SimplexSolver solver;
  for (int trial = 0; trial < 150; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    const int m = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const RandomLp data = random_lp(rng, n, m, trial % 7 != 0 || m == 0);
    std::vector<ColumnStatus> start(static_cast<std::size_t>(n));
    for (auto& s : start) s = static_cast<ColumnStatus>(std::uniform_int_distribution<int>(0, 2)(rng));
    const LpSolution sol = solver.solve(data.build(), start);
    const auto oracle = vertex_enumeration(data);
    if (!oracle) {
      EXPECT_EQ(sol.status, Status::Infeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(sol.status, Status::Optimal) << "trial " << trial;
    EXPECT_NEAR(sol.objective, *oracle, 1e-7) << "trial " << trial;
  }
}

TEST(Lp, StartOfWrongLengthIsRejected) {
  SimplexSolver solver;
  const std::vector<ColumnStatus> start(3, ColumnStatus::Basic);
  EXPECT_THROW(solver.solve(LinearProgram({1.0}, {}, {}, {0.0}, {1.0}), start), std::invalid_argument);
}

TEST(LpProperty, Deterministic) {
  std::mt19937_64 rng(99);
  const RandomLp data = random_lp(rng, 6, 3, true);
  const LpSolution a = solve(data.build());
  SimplexSolver solver;
  const LpSolution b = solver.solve(data.build());
  const LpSolution c = solver.solve(data.build());
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(b.x, c.x);
  EXPECT_EQ(a.duals, c.duals);
  EXPECT_EQ(a.objective, c.objective);
}

TEST(LpProperty, DegenerateTransportationProblem) {
  // 3x3 transportation with balanced supplies; highly degenerate.
  const std::vector<double> supply{10, 10, 10};
  const std::vector<double> demand{10, 10, 10};
  const double cost[3][3] = {{1, 2, 3}, {2, 1, 2}, {3, 2, 1}};
  LpBuilder b;
  int var[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) var[i][j] = b.add_variable(0.0, kInf, cost[i][j]);
  for (int i = 0; i < 3; ++i) {
    const int r = b.add_row(supply[static_cast<std::size_t>(i)]);
    for (int j = 0; j < 3; ++j) b.set_coefficient(r, var[i][j], 1.0);
  }
  for (int j = 0; j < 3; ++j) {
    const int r = b.add_row(demand[static_cast<std::size_t>(j)]);
    for (int i = 0; i < 3; ++i) b.set_coefficient(r, var[i][j], 1.0);
  }
  const LinearProgram lp = b.build();
  const LpSolution sol = solve(lp);
  ASSERT_EQ(sol.status, Status::Optimal);
  EXPECT_NEAR(sol.objective, 30.0, 1e-9);
  expect_optimality_conditions(lp, sol);
}
