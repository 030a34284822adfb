// Bounded-variable two-phase primal simplex. The basis inverse is kept in
// product form, B^{-1} = E_k ... E_1 B0^{-1}: B0 is the triangular crash
// basis (or a dense inverse after a refactorization) and each pivot appends
// one sparse eta column E_i.
//
// The starting basis comes from a triangular crash: rows are visited in
// order and each one takes, when possible, a column that first appears in
// that row and can absorb the row residual within its bounds. Rows left
// without such a column get an artificial variable, and only then does a
// phase 1 run. Problems whose rows are written "defined variable last"
// (dynamics, balances, epigraphs) crash to a feasible basis directly.
//
// With a start basis the crash basis is followed by one pivot per column the
// start marks basic. Boxed nonbasic columns then move to the bound their
// reduced cost asks for and a dual simplex restores primal feasibility. If
// the start leaves an unboxed column dual infeasible, or the dual simplex
// stalls, the solve restarts from the plain crash.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "microgrid/errors.hpp"
#include "microgrid/lp.hpp"

namespace microgrid::lp {

namespace {

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, Free };

constexpr double kHarrisTol = 1e-9;
constexpr double kDegenerateStep = 1e-12;
constexpr int kRefactorInterval = 500;

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SimplexOptions& opt, std::vector<double>& binv,
          std::span<const ColumnStatus> start)
      : lp_(lp), opt_(opt), m_(lp.num_rows()), n_(lp.num_cols()), binv_(binv), start_(start) {}

  LpSolution run();

 private:
  enum class Outcome { Optimal, Unbounded };

  std::size_t mu() const { return static_cast<std::size_t>(m_); }

  template <class F>
  void for_column(int j, F&& f) const {
    if (j < n_) {
      for (const Entry& e : lp_.column(j)) f(e.row, e.value);
    } else {
      const auto k = static_cast<std::size_t>(j - n_);
      f(art_row_[k], art_sign_[k]);
    }
  }

  void crash();
  void invert_triangular();
  void reinvert();
  void recompute_basic_values();
  void compute_duals(const std::vector<double>& cost);
  double column_dot_y(int j) const;
  void ftran(int j);
  void ftran_vector(std::vector<double>& z);
  void solve_base(std::vector<double>& z);
  void solve_base_transposed(std::vector<double>& w);
  void apply_etas(std::vector<double>& z) const;
  void apply_etas_transposed(std::vector<double>& w) const;
  void clear_etas();
  double primal_residual();
  Outcome iterate(const std::vector<double>& cost);
  void record_eta(int r, int q);
  void pivot(int r, int q, const std::vector<double>& cost);
  void make_nonbasic(std::size_t j);
  bool warm_start(const std::vector<double>& cost);
  bool dual_iterate(const std::vector<double>& cost);
  void cold_start();

  const LinearProgram& lp_;
  const SimplexOptions& opt_;
  int m_;
  int n_;
  int total_ = 0;
  std::vector<double>& binv_;
  std::span<const ColumnStatus> start_;

  std::vector<int> art_row_;
  std::vector<double> art_sign_;
  std::vector<double> lb_;
  std::vector<double> ub_;
  std::vector<double> x_;
  std::vector<VarState> state_;
  std::vector<int> head_;
  std::vector<double> y_;
  std::vector<double> alpha_;
  std::vector<double> work_;

  bool dense_base_ = false;  // B0^{-1} stored in binv_ (column-major)
  std::vector<int> base_head_;
  std::vector<double> base_diag_;
  std::vector<int> eta_pos_;
  std::vector<double> eta_pivot_;
  std::vector<std::size_t> eta_start_;
  std::vector<int> eta_index_;
  std::vector<double> eta_value_;
  int iterations_ = 0;
  int iteration_limit_ = 0;
  int pivots_since_refactor_ = 0;
};

void Simplex::crash() {
  const auto m = mu();
  const auto n = static_cast<std::size_t>(n_);
  lb_.assign(lp_.lower().begin(), lp_.lower().end());
  ub_.assign(lp_.upper().begin(), lp_.upper().end());
  x_.assign(n, 0.0);
  state_.assign(n, VarState::AtLower);
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isfinite(lb_[j])) {
      x_[j] = lb_[j];
      state_[j] = VarState::AtLower;
    } else if (std::isfinite(ub_[j])) {
      x_[j] = ub_[j];
      state_[j] = VarState::AtUpper;
    } else {
      x_[j] = 0.0;
      state_[j] = VarState::Free;
    }
  }

  // Columns bucketed by the first row they touch.
  std::vector<std::vector<int>> bucket(m);
  std::vector<double> activity(m, 0.0);
  for (int j = 0; j < n_; ++j) {
    const auto col = lp_.column(j);
    if (col.empty()) continue;
    bucket[static_cast<std::size_t>(col.front().row)].push_back(j);
    const double xj = x_[static_cast<std::size_t>(j)];
    if (xj != 0.0) {
      for (const Entry& e : col) activity[static_cast<std::size_t>(e.row)] += e.value * xj;
    }
  }

  head_.assign(m, -1);
  art_row_.clear();
  art_sign_.clear();
  for (std::size_t i = 0; i < m; ++i) {
    const double resid = lp_.rhs()[i] - activity[i];
    int best = -1;
    double best_abs = 0.0;
    double best_value = 0.0;
    for (int j : bucket[i]) {
      const auto ju = static_cast<std::size_t>(j);
      if (lb_[ju] == ub_[ju]) continue;
      const double a = lp_.column(j).front().value;
      if (std::abs(a) <= opt_.pivot_tol) continue;
      const double value = x_[ju] + resid / a;
      if (value < lb_[ju] - opt_.feasibility_tol || value > ub_[ju] + opt_.feasibility_tol) continue;
      if (std::abs(a) > best_abs) {
        best = j;
        best_abs = std::abs(a);
        best_value = value;
      }
    }
    if (best >= 0) {
      const auto bu = static_cast<std::size_t>(best);
      const double value = std::clamp(best_value, lb_[bu], ub_[bu]);
      const double delta = value - x_[bu];
      x_[bu] = value;
      state_[bu] = VarState::Basic;
      head_[i] = best;
      if (delta != 0.0) {
        for (const Entry& e : lp_.column(best)) activity[static_cast<std::size_t>(e.row)] += e.value * delta;
      }
    } else {
      const double sign = resid >= 0.0 ? 1.0 : -1.0;
      art_row_.push_back(static_cast<int>(i));
      art_sign_.push_back(sign);
      lb_.push_back(0.0);
      ub_.push_back(kInf);
      x_.push_back(std::abs(resid));
      state_.push_back(VarState::Basic);
      head_[i] = n_ + static_cast<int>(art_row_.size()) - 1;
      activity[i] += resid;
    }
  }
  total_ = n_ + static_cast<int>(art_row_.size());
}

void Simplex::invert_triangular() {
  // The crash basis is lower triangular: position i holds a column whose
  // first nonzero is in row i.
  const auto m = mu();
  base_head_ = head_;
  base_diag_.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for_column(head_[i], [&](int r, double a) {
      if (static_cast<std::size_t>(r) == i) base_diag_[i] = a;
    });
  }
  dense_base_ = false;
  clear_etas();
}

void Simplex::clear_etas() {
  eta_pos_.clear();
  eta_pivot_.clear();
  eta_start_.assign(1, 0);
  eta_index_.clear();
  eta_value_.clear();
  pivots_since_refactor_ = 0;
}

void Simplex::solve_base(std::vector<double>& z) {
  const auto m = mu();
  if (dense_base_) {
    work_.assign(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      if (z[r] == 0.0) continue;
      const double* col = binv_.data() + r * m;
      for (std::size_t i = 0; i < m; ++i) work_[i] += z[r] * col[i];
    }
    z.swap(work_);
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (z[i] == 0.0) continue;
    z[i] /= base_diag_[i];
    const double zi = z[i];
    for_column(base_head_[i], [&](int r, double a) {
      if (static_cast<std::size_t>(r) > i) z[static_cast<std::size_t>(r)] -= a * zi;
    });
  }
}

void Simplex::solve_base_transposed(std::vector<double>& w) {
  const auto m = mu();
  if (dense_base_) {
    work_.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const double* col = binv_.data() + k * m;
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += w[i] * col[i];
      work_[k] = s;
    }
    w.swap(work_);
    return;
  }
  for (std::size_t i = m; i-- > 0;) {
    double s = w[i];
    for_column(base_head_[i], [&](int r, double a) {
      if (static_cast<std::size_t>(r) > i) s -= a * w[static_cast<std::size_t>(r)];
    });
    w[i] = s / base_diag_[i];
  }
}

void Simplex::apply_etas(std::vector<double>& z) const {
  for (std::size_t e = 0; e < eta_pos_.size(); ++e) {
    const auto r = static_cast<std::size_t>(eta_pos_[e]);
    if (z[r] == 0.0) continue;
    const double t = z[r] / eta_pivot_[e];
    z[r] = t;
    for (std::size_t k = eta_start_[e]; k < eta_start_[e + 1]; ++k) {
      z[static_cast<std::size_t>(eta_index_[k])] -= eta_value_[k] * t;
    }
  }
}

void Simplex::apply_etas_transposed(std::vector<double>& w) const {
  for (std::size_t e = eta_pos_.size(); e-- > 0;) {
    const auto r = static_cast<std::size_t>(eta_pos_[e]);
    double s = w[r];
    for (std::size_t k = eta_start_[e]; k < eta_start_[e + 1]; ++k) {
      s -= eta_value_[k] * w[static_cast<std::size_t>(eta_index_[k])];
    }
    w[r] = s / eta_pivot_[e];
  }
}

void Simplex::ftran_vector(std::vector<double>& z) {
  solve_base(z);
  apply_etas(z);
}

void Simplex::reinvert() {
  // Gauss-Jordan with partial pivoting on [B | I].
  const auto m = mu();
  std::vector<double> b(m * m, 0.0);  // row-major
  for (std::size_t i = 0; i < m; ++i) {
    for_column(head_[i], [&](int r, double a) { b[static_cast<std::size_t>(r) * m + i] = a; });
  }
  std::vector<double> inv(m * m, 0.0);  // row-major
  for (std::size_t i = 0; i < m; ++i) inv[i * m + i] = 1.0;

  for (std::size_t c = 0; c < m; ++c) {
    std::size_t p = c;
    double best = std::abs(b[c * m + c]);
    for (std::size_t r = c + 1; r < m; ++r) {
      if (std::abs(b[r * m + c]) > best) {
        best = std::abs(b[r * m + c]);
        p = r;
      }
    }
    if (best <= 1e-14) {
      throw SolverError("simplex: singular basis during refactorization");
    }
    if (p != c) {
      std::swap_ranges(b.begin() + static_cast<std::ptrdiff_t>(p * m), b.begin() + static_cast<std::ptrdiff_t>(p * m + m),
                       b.begin() + static_cast<std::ptrdiff_t>(c * m));
      std::swap_ranges(inv.begin() + static_cast<std::ptrdiff_t>(p * m),
                       inv.begin() + static_cast<std::ptrdiff_t>(p * m + m),
                       inv.begin() + static_cast<std::ptrdiff_t>(c * m));
    }
    const double piv = b[c * m + c];
    for (std::size_t k = 0; k < m; ++k) {
      b[c * m + k] /= piv;
      inv[c * m + k] /= piv;
    }
    for (std::size_t r = 0; r < m; ++r) {
      if (r == c) continue;
      const double f = b[r * m + c];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < m; ++k) {
        b[r * m + k] -= f * b[c * m + k];
        inv[r * m + k] -= f * inv[c * m + k];
      }
    }
  }
  // inv is B^{-1} row-major with rows indexed by basis position.
  binv_.assign(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < m; ++k) binv_[k * m + i] = inv[i * m + k];
  }
  dense_base_ = true;
  clear_etas();
}

void Simplex::recompute_basic_values() {
  const auto m = mu();
  std::vector<double> r(lp_.rhs().begin(), lp_.rhs().end());
  for (int j = 0; j < total_; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (state_[ju] == VarState::Basic || x_[ju] == 0.0) continue;
    const double xj = x_[ju];
    for_column(j, [&](int row, double a) { r[static_cast<std::size_t>(row)] -= a * xj; });
  }
  ftran_vector(r);
  for (std::size_t i = 0; i < m; ++i) x_[static_cast<std::size_t>(head_[i])] = r[i];
}

void Simplex::compute_duals(const std::vector<double>& cost) {
  const auto m = mu();
  y_.resize(m);
  for (std::size_t i = 0; i < m; ++i) y_[i] = cost[static_cast<std::size_t>(head_[i])];
  apply_etas_transposed(y_);
  solve_base_transposed(y_);
}

double Simplex::column_dot_y(int j) const {
  double s = 0.0;
  for_column(j, [&](int r, double a) { s += a * y_[static_cast<std::size_t>(r)]; });
  return s;
}

void Simplex::ftran(int j) {
  alpha_.assign(mu(), 0.0);
  for_column(j, [&](int r, double a) { alpha_[static_cast<std::size_t>(r)] += a; });
  ftran_vector(alpha_);
}

double Simplex::primal_residual() {
  std::vector<double> r(lp_.rhs().begin(), lp_.rhs().end());
  for (int j = 0; j < total_; ++j) {
    const double xj = x_[static_cast<std::size_t>(j)];
    if (xj == 0.0) continue;
    for_column(j, [&](int row, double a) { r[static_cast<std::size_t>(row)] -= a * xj; });
  }
  double worst = 0.0;
  for (double v : r) worst = std::max(worst, std::abs(v));
  return worst;
}

void Simplex::pivot(int r, int q, const std::vector<double>& cost) {
  record_eta(r, q);
  compute_duals(cost);
}

void Simplex::record_eta(int r, int q) {
  const auto m = mu();
  const auto ru = static_cast<std::size_t>(r);
  eta_pos_.push_back(r);
  eta_pivot_.push_back(alpha_[ru]);
  for (std::size_t i = 0; i < m; ++i) {
    if (i == ru || alpha_[i] == 0.0) continue;
    eta_index_.push_back(static_cast<int>(i));
    eta_value_.push_back(alpha_[i]);
  }
  eta_start_.push_back(eta_index_.size());
  head_[ru] = q;
  state_[static_cast<std::size_t>(q)] = VarState::Basic;
  ++pivots_since_refactor_;
}

void Simplex::make_nonbasic(std::size_t j) {
  const bool upper = !start_.empty() && j < start_.size() && start_[j] == ColumnStatus::AtUpper;
  if (std::isfinite(ub_[j]) && (upper || !std::isfinite(lb_[j]))) {
    x_[j] = ub_[j];
    state_[j] = VarState::AtUpper;
  } else if (std::isfinite(lb_[j])) {
    x_[j] = lb_[j];
    state_[j] = VarState::AtLower;
  } else {
    x_[j] = 0.0;
    state_[j] = VarState::Free;
  }
}

// Pivots the columns marked basic in the start into the crash basis, puts
// boxed nonbasic columns at the bound their reduced cost asks for, then runs
// the dual simplex. False means the start was unusable.
bool Simplex::warm_start(const std::vector<double>& cost) {
  const auto m = mu();
  const auto n = static_cast<std::size_t>(n_);
  std::vector<char> wanted(n, 0);
  for (std::size_t j = 0; j < n; ++j) wanted[j] = start_[j] == ColumnStatus::Basic;
  for (std::size_t j = 0; j < n; ++j) {
    if (!wanted[j] || state_[j] == VarState::Basic) continue;
    ftran(static_cast<int>(j));
    int r = -1;
    double best = 1e-7;
    for (std::size_t i = 0; i < m; ++i) {
      const auto h = static_cast<std::size_t>(head_[i]);
      if (h < n && wanted[h]) continue;
      if (std::abs(alpha_[i]) > best) {
        best = std::abs(alpha_[i]);
        r = static_cast<int>(i);
      }
    }
    if (r < 0) continue;
    make_nonbasic(static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]));
    record_eta(r, static_cast<int>(j));
    if (pivots_since_refactor_ >= kRefactorInterval) {
      reinvert();
    }
  }
  recompute_basic_values();
  compute_duals(cost);

  bool moved = false;
  for (std::size_t j = 0; j < n; ++j) {
    const VarState st = state_[j];
    if (st == VarState::Basic || lb_[j] == ub_[j]) continue;
    const double d = cost[j] - column_dot_y(static_cast<int>(j));
    const bool boxed = std::isfinite(lb_[j]) && std::isfinite(ub_[j]);
    if (boxed) {
      if (st == VarState::AtLower && d < -opt_.optimality_tol) {
        x_[j] = ub_[j];
        state_[j] = VarState::AtUpper;
        moved = true;
      } else if (st == VarState::AtUpper && d > opt_.optimality_tol) {
        x_[j] = lb_[j];
        state_[j] = VarState::AtLower;
        moved = true;
      }
      continue;
    }
    if ((st == VarState::AtLower && d < -opt_.optimality_tol) || (st == VarState::AtUpper && d > opt_.optimality_tol) ||
        (st == VarState::Free && std::abs(d) > opt_.optimality_tol)) {
      return false;
    }
  }
  if (moved) recompute_basic_values();
  return dual_iterate(cost);
}

// Bounded dual simplex from a dual feasible basis. Leaves on the most
// violated basic bound; Harris two-pass ratio test on the reduced costs.
bool Simplex::dual_iterate(const std::vector<double>& cost) {
  const auto m = mu();
  const auto total = static_cast<std::size_t>(total_);
  std::vector<double> rho;
  std::vector<double> row(total);
  std::vector<double> reduced(total);
  while (true) {
    if (++iterations_ > iteration_limit_) return false;
    if (pivots_since_refactor_ >= kRefactorInterval) {
      reinvert();
      recompute_basic_values();
      compute_duals(cost);
    }

    int r = -1;
    double worst = opt_.feasibility_tol;
    double target = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto j = static_cast<std::size_t>(head_[i]);
      if (lb_[j] - x_[j] > worst) {
        worst = lb_[j] - x_[j];
        r = static_cast<int>(i);
        target = lb_[j];
      } else if (x_[j] - ub_[j] > worst) {
        worst = x_[j] - ub_[j];
        r = static_cast<int>(i);
        target = ub_[j];
      }
    }
    if (r < 0) return true;
    const auto ru = static_cast<std::size_t>(r);
    const auto out = static_cast<std::size_t>(head_[ru]);
    const bool up = x_[out] < target;

    rho.assign(m, 0.0);
    rho[ru] = 1.0;
    apply_etas_transposed(rho);
    solve_base_transposed(rho);

    // x_out moves by -row_j * dx_j; it has to move toward target.
    const double sign = up ? -1.0 : 1.0;
    double theta_max = kInf;
    for (std::size_t j = 0; j < total; ++j) {
      const VarState st = state_[j];
      row[j] = 0.0;
      if (st == VarState::Basic || lb_[j] == ub_[j]) continue;
      double a = 0.0;
      double yd = 0.0;
      for_column(static_cast<int>(j), [&](int i, double v) {
        a += v * rho[static_cast<std::size_t>(i)];
        yd += v * y_[static_cast<std::size_t>(i)];
      });
      const double d = cost[j] - yd;
      double slack = 0.0;
      if (st == VarState::AtLower) {
        if (sign * a <= opt_.pivot_tol) continue;
        slack = std::max(0.0, d);
      } else if (st == VarState::AtUpper) {
        if (sign * a >= -opt_.pivot_tol) continue;
        slack = std::max(0.0, -d);
      } else {
        if (std::abs(a) <= opt_.pivot_tol) continue;
        slack = std::abs(d);
      }
      row[j] = a;
      reduced[j] = slack;
      theta_max = std::min(theta_max, (slack + opt_.optimality_tol) / std::abs(a));
    }
    int q = -1;
    double best = 0.0;
    for (std::size_t j = 0; j < total; ++j) {
      const double a = std::abs(row[j]);
      if (a == 0.0 || reduced[j] / a > theta_max) continue;
      if (a > best) {
        best = a;
        q = static_cast<int>(j);
      }
    }
    if (q < 0) return false;

    ftran(q);
    const double ar = alpha_[ru];
    if (std::abs(ar) <= opt_.pivot_tol) return false;
    const double step = (x_[out] - target) / ar;
    x_[static_cast<std::size_t>(q)] += step;
    for (std::size_t i = 0; i < m; ++i) {
      if (alpha_[i] != 0.0) x_[static_cast<std::size_t>(head_[i])] -= step * alpha_[i];
    }
    x_[out] = target;
    state_[out] = up || lb_[out] == ub_[out] ? VarState::AtLower : VarState::AtUpper;
    pivot(r, q, cost);
  }
}

void Simplex::cold_start() {
  start_ = {};
  crash();
  invert_triangular();
  recompute_basic_values();
}

Simplex::Outcome Simplex::iterate(const std::vector<double>& cost) {
  const auto m = mu();
  compute_duals(cost);
  int degenerate_run = 0;
  bool bland = false;

  while (true) {
    if (++iterations_ > iteration_limit_) {
      throw SolverError("simplex: iteration limit reached (" + std::to_string(iteration_limit_) + ")");
    }
    if (pivots_since_refactor_ >= kRefactorInterval) {
      reinvert();
      recompute_basic_values();
      compute_duals(cost);
    }

    // Pricing: Dantzig, or lowest eligible index under Bland's rule.
    int q = -1;
    int dir = 0;
    double best = 0.0;
    for (int j = 0; j < total_; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const VarState st = state_[ju];
      if (st == VarState::Basic || lb_[ju] == ub_[ju]) continue;
      const double d = cost[ju] - column_dot_y(j);
      int dj = 0;
      if (st == VarState::AtLower) {
        if (d < -opt_.optimality_tol) dj = 1;
      } else if (st == VarState::AtUpper) {
        if (d > opt_.optimality_tol) dj = -1;
      } else {
        if (d < -opt_.optimality_tol) dj = 1;
        else if (d > opt_.optimality_tol) dj = -1;
      }
      if (dj == 0) continue;
      if (bland) {
        q = j;
        dir = dj;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = j;
        dir = dj;
      }
    }
    if (q < 0) return Outcome::Optimal;

    ftran(q);
    const auto qu = static_cast<std::size_t>(q);

    // Ratio test. Each basic variable moves by -dir * theta * alpha_i.
    double step_limit = kInf;
    if (dir > 0 && std::isfinite(ub_[qu])) step_limit = ub_[qu] - x_[qu];
    if (dir < 0 && std::isfinite(lb_[qu])) step_limit = x_[qu] - lb_[qu];

    auto ratio = [&](std::size_t i, double tol) -> double {
      const double a = dir * alpha_[i];
      const auto j = static_cast<std::size_t>(head_[i]);
      if (a > 0.0) {
        return std::isfinite(lb_[j]) ? (x_[j] - lb_[j] + tol) / a : kInf;
      }
      return std::isfinite(ub_[j]) ? (ub_[j] - x_[j] + tol) / (-a) : kInf;
    };

    int leave = -1;
    double theta = step_limit;
    if (bland) {
      for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(alpha_[i]) <= opt_.pivot_tol) continue;
        const double t = std::max(0.0, ratio(i, 0.0));
        if (t < theta - kDegenerateStep ||
            (leave >= 0 && std::abs(t - theta) <= kDegenerateStep && head_[i] < head_[static_cast<std::size_t>(leave)])) {
          theta = t;
          leave = static_cast<int>(i);
        }
      }
    } else {
      double relaxed = kInf;
      for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(alpha_[i]) <= opt_.pivot_tol) continue;
        relaxed = std::min(relaxed, ratio(i, kHarrisTol));
      }
      if (step_limit <= relaxed) {
        theta = step_limit;
      } else {
        double best_pivot = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double mag = std::abs(alpha_[i]);
          if (mag <= opt_.pivot_tol) continue;
          if (ratio(i, 0.0) > relaxed) continue;
          if (mag > best_pivot ||
              (mag == best_pivot && head_[i] < head_[static_cast<std::size_t>(leave)])) {
            best_pivot = mag;
            leave = static_cast<int>(i);
          }
        }
        theta = std::max(0.0, ratio(static_cast<std::size_t>(leave), 0.0));
      }
    }

    if (leave < 0 && !std::isfinite(theta)) return Outcome::Unbounded;

    if (theta <= kDegenerateStep) {
      if (++degenerate_run >= opt_.degenerate_pivots_before_bland) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }

    const double move = dir * theta;
    if (move != 0.0) {
      x_[qu] += move;
      for (std::size_t i = 0; i < m; ++i) {
        if (alpha_[i] != 0.0) x_[static_cast<std::size_t>(head_[i])] -= move * alpha_[i];
      }
    }

    if (leave < 0) {
      // Bound flip of the entering variable.
      if (dir > 0) {
        x_[qu] = ub_[qu];
        state_[qu] = VarState::AtUpper;
      } else {
        x_[qu] = lb_[qu];
        state_[qu] = VarState::AtLower;
      }
      continue;
    }

    const auto lu = static_cast<std::size_t>(leave);
    const auto out = static_cast<std::size_t>(head_[lu]);
    const bool to_lower = dir * alpha_[lu] > 0.0;
    if (lb_[out] == ub_[out]) {
      x_[out] = lb_[out];
      state_[out] = VarState::AtLower;
    } else if (to_lower) {
      x_[out] = lb_[out];
      state_[out] = VarState::AtLower;
    } else {
      x_[out] = ub_[out];
      state_[out] = VarState::AtUpper;
    }
    pivot(leave, q, cost);
  }
}

LpSolution Simplex::run() {
  const auto m = mu();
  crash();
  invert_triangular();
  recompute_basic_values();
  iteration_limit_ = opt_.max_iterations > 0 ? opt_.max_iterations : 50 * (m_ + total_) + 1000;
  if (!start_.empty() && art_row_.empty()) {
    std::vector<double> cost(lp_.objective().begin(), lp_.objective().end());
    if (!warm_start(cost)) cold_start();
  }

  double rhs_scale = 1.0;
  for (double b : lp_.rhs()) rhs_scale = std::max(rhs_scale, std::abs(b));

  LpSolution sol;
  const auto total = static_cast<std::size_t>(total_);

  if (!art_row_.empty()) {
    std::vector<double> phase1(total, 0.0);
    for (std::size_t j = static_cast<std::size_t>(n_); j < total; ++j) phase1[j] = 1.0;
    iterate(phase1);  // bounded below by zero, never unbounded
    double infeasibility = 0.0;
    for (std::size_t j = static_cast<std::size_t>(n_); j < total; ++j) infeasibility += x_[j];
    if (infeasibility > 10.0 * opt_.feasibility_tol * rhs_scale) {
      sol.status = Status::Infeasible;
      sol.iterations = iterations_;
      return sol;
    }
    for (std::size_t j = static_cast<std::size_t>(n_); j < total; ++j) {
      ub_[j] = 0.0;
      if (state_[j] != VarState::Basic) {
        x_[j] = 0.0;
        state_[j] = VarState::AtLower;
      }
    }
  }

  std::vector<double> cost(total, 0.0);
  std::copy(lp_.objective().begin(), lp_.objective().end(), cost.begin());

  for (int attempt = 0;; ++attempt) {
    if (iterate(cost) == Outcome::Unbounded) {
      sol.status = Status::Unbounded;
      sol.iterations = iterations_;
      return sol;
    }
    if (primal_residual() <= opt_.feasibility_tol * rhs_scale * 0.1 || attempt >= 3) break;
    reinvert();
    recompute_basic_values();
  }

  sol.status = Status::Optimal;
  sol.iterations = iterations_;
  compute_duals(cost);
  sol.x.assign(x_.begin(), x_.begin() + n_);
  sol.objective = 0.0;
  for (int j = 0; j < n_; ++j) sol.objective += lp_.objective()[static_cast<std::size_t>(j)] * sol.x[static_cast<std::size_t>(j)];
  sol.duals = y_;
  sol.reduced_costs.resize(static_cast<std::size_t>(n_));
  for (int j = 0; j < n_; ++j) {
    sol.reduced_costs[static_cast<std::size_t>(j)] = lp_.objective()[static_cast<std::size_t>(j)] - column_dot_y(j);
  }
  sol.columns.resize(static_cast<std::size_t>(n_));
  for (std::size_t j = 0; j < sol.columns.size(); ++j) {
    sol.columns[j] = state_[j] == VarState::Basic     ? ColumnStatus::Basic
                     : state_[j] == VarState::AtUpper ? ColumnStatus::AtUpper
                                                      : ColumnStatus::AtLower;
  }
  (void)m;
  return sol;
}

}  // namespace

LpSolution SimplexSolver::solve(const LinearProgram& lp) { return solve(lp, {}); }

LpSolution SimplexSolver::solve(const LinearProgram& lp, std::span<const ColumnStatus> start) {
  if (!start.empty() && start.size() != static_cast<std::size_t>(lp.num_cols())) {
    throw std::invalid_argument("simplex: start basis has the wrong length");
  }
  Simplex simplex(lp, options_, binv_, start);
  return simplex.run();
}

}  // namespace microgrid::lp
