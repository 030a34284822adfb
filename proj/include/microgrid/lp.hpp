#pragma once

// Small linear programs in equality form with variable bounds:
//
//   min c.x   s.t.  A x = rhs,  lower <= x <= upper
//
// solved by a bounded-variable two-phase primal simplex that keeps an
// explicit basis inverse. Duals of the equality rows are exact, which is
// what the cut generation relies on.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace microgrid::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Entry {
  int row = 0;
  double value = 0.0;
};

/// Immutable LP. The constraint matrix is stored column-compressed; the
/// dense constructor is a convenience for small hand-written problems.
class LinearProgram {
 public:
  LinearProgram() = default;

  /// `a` is row-major, a.size() == rhs.size(), each row of length c.size().
  /// Throws std::invalid_argument on inconsistent dimensions, lower > upper
  /// or NaN entries.
  LinearProgram(std::vector<double> c, const std::vector<std::vector<double>>& a, std::vector<double> rhs,
                std::vector<double> lower, std::vector<double> upper, std::vector<std::string> names = {});

  int num_rows() const { return static_cast<int>(rhs_.size()); }
  int num_cols() const { return static_cast<int>(c_.size()); }

  std::span<const double> objective() const { return c_; }
  std::span<const double> rhs() const { return rhs_; }
  std::span<const double> lower() const { return lower_; }
  std::span<const double> upper() const { return upper_; }
  const std::vector<std::string>& names() const { return names_; }

  std::span<const Entry> column(int j) const {
    return {entries_.data() + col_start_[static_cast<std::size_t>(j)],
            entries_.data() + col_start_[static_cast<std::size_t>(j) + 1]};
  }
  double coefficient(int row, int col) const;

  /// Copy with a different right-hand side (same length).
  LinearProgram with_rhs(std::vector<double> rhs) const;

 private:
  friend class LpBuilder;
  void validate() const;

  std::vector<double> c_;
  std::vector<double> rhs_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<std::int32_t> col_start_{0};
  std::vector<Entry> entries_;
  std::vector<std::string> names_;
};

/// Incremental construction of a LinearProgram. Duplicate (row, col)
/// coefficients are summed.
class LpBuilder {
 public:
  int add_variable(double lower, double upper, double cost);
  int add_variable(double lower, double upper, double cost, std::string name);
  int add_row(double rhs);
  void set_coefficient(int row, int col, double value);
  void add_to_rhs(int row, double value) { rhs_[static_cast<std::size_t>(row)] += value; }
  void add_to_cost(int col, double value) { c_[static_cast<std::size_t>(col)] += value; }

  int num_rows() const { return static_cast<int>(rhs_.size()); }
  int num_cols() const { return static_cast<int>(c_.size()); }

  LinearProgram build() const;

 private:
  struct Triplet {
    int row;
    int col;
    double value;
  };
  std::vector<double> c_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> rhs_;
  std::vector<Triplet> triplets_;
  std::vector<std::string> names_;
  bool named_ = false;
};

enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status s);

/// Position of a structural column in a basis.
enum class ColumnStatus : std::uint8_t { Basic, AtLower, AtUpper };

struct LpSolution {
  Status status = Status::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::vector<double> duals;          ///< one per equality row
  std::vector<double> reduced_costs;  ///< c - A^T duals
  int iterations = 0;
  std::vector<ColumnStatus> columns;  ///< final basis, one per column (free nonbasic reads AtLower)
};

struct SimplexOptions {
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-10;
  int degenerate_pivots_before_bland = 50;
  int max_iterations = 0;  ///< 0 selects a limit from the problem size
};

/// Reusable solver; keeps scratch buffers between solves. Not thread-safe:
/// use one instance per thread.
class SimplexSolver {
 public:
  explicit SimplexSolver(SimplexOptions options = {}) : options_(options) {}

  LpSolution solve(const LinearProgram& lp);

  /// `start` holds one status per column, typically the final basis of a
  /// similar problem. AtUpper columns start at their upper bound and Basic
  /// columns are preferred by the crash. Any start is safe; a poor one only
  /// costs iterations.
  LpSolution solve(const LinearProgram& lp, std::span<const ColumnStatus> start);

 private:
  SimplexOptions options_;
  std::vector<double> binv_;  // reused basis-inverse storage
};

/// One-shot convenience wrapper.
LpSolution solve(const LinearProgram& lp);

struct ParametricDuals {
  double value = 0.0;
  std::vector<double> gradient;  ///< d value / d rhs[row] for each requested row
};

/// Value and rhs-subgradient restricted to `rows` (typically rows pinning an
/// incoming state). Throws std::logic_error unless `solution` is Optimal.
ParametricDuals parametric_duals(const LpSolution& solution, std::span<const int> rows);

/// Solves `lp` and extracts the parametric duals.
ParametricDuals parametric_duals(const LinearProgram& lp, std::span<const int> rows);

/// Human-readable dump: `min c...`, one `row_i: a... = b` line per row,
/// then `bounds: l <= x_j <= u` lines.
void write_text(std::ostream& out, const LinearProgram& lp);

}  // namespace microgrid::lp
