#pragma once

// Polyhedral lower approximations of the value functions: each stage keeps
// a list of affine minorants lambda . x + beta and evaluates their maximum.

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "microgrid/model.hpp"

namespace microgrid {

struct Cut {
  std::array<double, State::kDim> lambda{};
  double beta = 0.0;

  double operator()(const State& x) const {
    return lambda[0] * x.b + lambda[1] * x.h + lambda[2] * x.theta_w + lambda[3] * x.theta_i + beta;
  }
  bool operator==(const Cut&) const = default;
};

/// The terminal penalty kappa * (max(0, b0 - b) + max(0, h0 - h)) written as
/// the maximum of four affine pieces.
std::vector<Cut> terminal_cuts(const State& x0, double kappa);

struct ValueFunctions {
  std::vector<std::vector<Cut>> cuts;  ///< cuts[t], t = 0 .. T

  /// A zero cut at every stage t < T and the terminal pieces at T.
  static ValueFunctions initial(int horizon_steps, const State& x0, double kappa);

  int horizon_steps() const { return static_cast<int>(cuts.size()) - 1; }
  std::size_t total_cuts() const;

  bool operator==(const ValueFunctions&) const = default;
};

/// max over cuts[t] of lambda . x + beta.
double evaluate_vf(const ValueFunctions& vf, int t, const State& x);

/// `[[{"lambda": [4 numbers], "beta": number}, ...], ...]`, one inner array
/// per stage, numbers written with 17 significant digits.
void write_cuts(std::ostream& out, const ValueFunctions& vf);
ValueFunctions read_cuts(std::istream& in, const std::string& source = "<stream>");

}  // namespace microgrid
