#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "microgrid/lp.hpp"

namespace microgrid::lp {

LinearProgram::LinearProgram(std::vector<double> c, const std::vector<std::vector<double>>& a,
                             std::vector<double> rhs, std::vector<double> lower, std::vector<double> upper,
                             std::vector<std::string> names)
    : c_(std::move(c)), rhs_(std::move(rhs)), lower_(std::move(lower)), upper_(std::move(upper)),
      names_(std::move(names)) {
  if (a.size() != rhs_.size()) {
    throw std::invalid_argument("LinearProgram: A has " + std::to_string(a.size()) + " rows but rhs has " +
                                std::to_string(rhs_.size()));
  }
  const std::size_t n = c_.size();
  for (const auto& row : a) {
    if (row.size() != n) {
      throw std::invalid_argument("LinearProgram: A row length differs from c");
    }
  }
  col_start_.assign(n + 1, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::isnan(a[i][j])) {
        throw std::invalid_argument("LinearProgram: NaN in A");
      }
      if (a[i][j] != 0.0) {
        entries_.push_back({static_cast<int>(i), a[i][j]});
      }
    }
    col_start_[j + 1] = static_cast<std::int32_t>(entries_.size());
  }
  validate();
}

void LinearProgram::validate() const {
  const std::size_t n = c_.size();
  if (lower_.size() != n || upper_.size() != n) {
    throw std::invalid_argument("LinearProgram: bounds length differs from c");
  }
  if (!names_.empty() && names_.size() != n) {
    throw std::invalid_argument("LinearProgram: names length differs from c");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isnan(c_[j]) || std::isnan(lower_[j]) || std::isnan(upper_[j])) {
      throw std::invalid_argument("LinearProgram: NaN in objective or bounds");
    }
    if (lower_[j] > upper_[j]) {
      throw std::invalid_argument("LinearProgram: lower > upper for column " + std::to_string(j));
    }
  }
  for (double b : rhs_) {
    if (!std::isfinite(b)) {
      throw std::invalid_argument("LinearProgram: non-finite rhs");
    }
  }
}

double LinearProgram::coefficient(int row, int col) const {
  for (const Entry& e : column(col)) {
    if (e.row == row) {
      return e.value;
    }
  }
  return 0.0;
}

LinearProgram LinearProgram::with_rhs(std::vector<double> rhs) const {
  if (rhs.size() != rhs_.size()) {
    throw std::invalid_argument("LinearProgram::with_rhs: length mismatch");
  }
  LinearProgram copy = *this;
  copy.rhs_ = std::move(rhs);
  copy.validate();
  return copy;
}

int LpBuilder::add_variable(double lower, double upper, double cost) {
  c_.push_back(cost);
  lower_.push_back(lower);
  upper_.push_back(upper);
  if (named_) {
    names_.emplace_back();
  }
  return static_cast<int>(c_.size()) - 1;
}

int LpBuilder::add_variable(double lower, double upper, double cost, std::string name) {
  if (!named_) {
    names_.resize(c_.size());
    named_ = true;
  }
  c_.push_back(cost);
  lower_.push_back(lower);
  upper_.push_back(upper);
  names_.push_back(std::move(name));
  return static_cast<int>(c_.size()) - 1;
}

int LpBuilder::add_row(double rhs) {
  rhs_.push_back(rhs);
  return static_cast<int>(rhs_.size()) - 1;
}

void LpBuilder::set_coefficient(int row, int col, double value) {
  if (row < 0 || row >= num_rows() || col < 0 || col >= num_cols()) {
    throw std::out_of_range("LpBuilder: coefficient index out of range");
  }
  if (value != 0.0) {
    triplets_.push_back({row, col, value});
  }
}

LinearProgram LpBuilder::build() const {
  LinearProgram lp;
  lp.c_ = c_;
  lp.rhs_ = rhs_;
  lp.lower_ = lower_;
  lp.upper_ = upper_;
  if (named_) {
    lp.names_ = names_;
  }

  const std::size_t n = c_.size();
  std::vector<Triplet> sorted = triplets_;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });

  lp.col_start_.assign(n + 1, 0);
  lp.entries_.reserve(sorted.size());
  std::size_t k = 0;
  for (std::size_t j = 0; j < n; ++j) {
    while (k < sorted.size() && static_cast<std::size_t>(sorted[k].col) == j) {
      const int row = sorted[k].row;
      double value = 0.0;
      while (k < sorted.size() && static_cast<std::size_t>(sorted[k].col) == j && sorted[k].row == row) {
        value += sorted[k].value;
        ++k;
      }
      if (std::isnan(value)) {
        throw std::invalid_argument("LpBuilder: NaN coefficient");
      }
      if (value != 0.0) {
        lp.entries_.push_back({row, value});
      }
    }
    lp.col_start_[j + 1] = static_cast<std::int32_t>(lp.entries_.size());
  }
  lp.validate();
  return lp;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal:
      return "optimal";
    case Status::Infeasible:
      return "infeasible";
    case Status::Unbounded:
      return "unbounded";
  }
  return "unknown";
}

LpSolution solve(const LinearProgram& lp) {
  SimplexSolver solver;
  return solver.solve(lp);
}

ParametricDuals parametric_duals(const LpSolution& solution, std::span<const int> rows) {
  if (solution.status != Status::Optimal) {
    throw std::logic_error(std::string("parametric_duals: LP is ") + to_string(solution.status));
  }
  ParametricDuals out;
  out.value = solution.objective;
  out.gradient.reserve(rows.size());
  for (int r : rows) {
    if (r < 0 || static_cast<std::size_t>(r) >= solution.duals.size()) {
      throw std::out_of_range("parametric_duals: row index out of range");
    }
    out.gradient.push_back(solution.duals[static_cast<std::size_t>(r)]);
  }
  return out;
}

ParametricDuals parametric_duals(const LinearProgram& lp, std::span<const int> rows) {
  return parametric_duals(solve(lp), rows);
}

void write_text(std::ostream& out, const LinearProgram& lp) {
  const int m = lp.num_rows();
  const int n = lp.num_cols();
  auto name = [&](int j) { return lp.names().empty() || lp.names()[static_cast<std::size_t>(j)].empty()
                                      ? "x" + std::to_string(j)
                                      : lp.names()[static_cast<std::size_t>(j)]; };

  out.precision(17);
  out << "min";
  for (int j = 0; j < n; ++j) {
    const double c = lp.objective()[static_cast<std::size_t>(j)];
    if (c != 0.0) {
      out << ' ' << (c < 0 ? "- " : "+ ") << std::abs(c) << ' ' << name(j);
    }
  }
  out << '\n';

  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(m));
  for (int j = 0; j < n; ++j) {
    for (const Entry& e : lp.column(j)) {
      rows[static_cast<std::size_t>(e.row)].emplace_back(j, e.value);
    }
  }
  for (int i = 0; i < m; ++i) {
    out << "row_" << i << ':';
    for (const auto& [j, a] : rows[static_cast<std::size_t>(i)]) {
      out << ' ' << (a < 0 ? "- " : "+ ") << std::abs(a) << ' ' << name(j);
    }
    out << " = " << lp.rhs()[static_cast<std::size_t>(i)] << '\n';
  }
  for (int j = 0; j < n; ++j) {
    out << "bounds: " << lp.lower()[static_cast<std::size_t>(j)] << " <= " << name(j)
        << " <= " << lp.upper()[static_cast<std::size_t>(j)] << '\n';
  }
}

}  // namespace microgrid::lp
