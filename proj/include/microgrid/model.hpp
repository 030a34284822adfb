#pragma once

// Physical model of the domestic microgrid: battery, electric hot-water tank
// and a two-node (wall / indoor) thermal envelope.
//
// Units: energies in kWh, powers in kW, temperatures in degC, time in hours.
// Thermal resistances are in K/W and heat capacities in J/K; the conversion
// to per-hour rates happens in thermal_coefficients().

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "microgrid/errors.hpp"

namespace microgrid {

inline constexpr double kBoundTolerance = 1e-9;

struct State {
  double b = 0.0;        ///< battery energy (kWh)
  double h = 0.0;        ///< tank energy above reference (kWh)
  double theta_w = 0.0;  ///< wall temperature (degC)
  double theta_i = 0.0;  ///< indoor temperature (degC)

  static constexpr std::size_t kDim = 4;

  std::array<double, kDim> as_array() const { return {b, h, theta_w, theta_i}; }
  static State from_array(const std::array<double, kDim>& a) { return {a[0], a[1], a[2], a[3]}; }

  bool operator==(const State&) const = default;
};

/// Decision taken at the start of a step.
struct Control {
  double f_b = 0.0;  ///< battery exchange, + charges (kW)
  double f_t = 0.0;  ///< space heater (kW)
  double f_h = 0.0;  ///< tank heater (kW)

  bool operator==(const Control&) const = default;
};

/// Noise realized over a step. PV production is already netted into d_el_net.
struct Uncertainty {
  double d_el_net = 0.0;  ///< electrical demand minus PV (kW), may be negative
  double d_hw = 0.0;      ///< hot-water draw (kW)

  bool operator==(const Uncertainty&) const = default;
};

/// Grid balance restored after the noise is observed.
struct Recourse {
  double f_ne = 0.0;   ///< grid import (kW)
  double spill = 0.0;  ///< curtailed surplus (kW)
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v, double tol = kBoundTolerance) const { return v >= lo - tol && v <= hi + tol; }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

struct ControlBox {
  Interval f_b;
  Interval f_t;
  Interval f_h;

  bool contains(const Control& u, double tol = kBoundTolerance) const {
    return f_b.contains(u.f_b, tol) && f_t.contains(u.f_t, tol) && f_h.contains(u.f_h, tol);
  }
  Control project(const Control& u) const { return {f_b.clamp(u.f_b), f_t.clamp(u.f_t), f_h.clamp(u.f_h)}; }
};

struct R6C2Params {
  double r_i = 0.008;   ///< indoor air / wall surface (K/W)
  double r_s = 0.002;   ///< wall surface / wall mass (K/W)
  double r_m = 0.0125;  ///< wall mass / outer surface (K/W)
  double r_e = 0.0125;  ///< outer surface / outdoor (K/W)
  double r_v = 1.0 / 20.0;  ///< ventilation (K/W)
  double r_f = 1.0 / 10.0;  ///< windows (K/W)
  double c_i = 2.0e6;   ///< indoor capacity (J/K)
  double c_m = 8.0e6;   ///< wall capacity (J/K)
  double gamma = 0.2;   ///< share of heater power dissipated in the walls
};

/// Volume/temperature description of the tank, used to derive h_max.
struct TankConversion {
  double volume_l = 120.0;
  double c_p = 4186.0;        ///< J/(kg.K)
  double rho_water = 1.0;     ///< kg/l
  double t_ref = 15.0;        ///< degC
  double t_max = 55.0;        ///< degC

  double h_max_kwh() const { return rho_water * volume_l * c_p * (t_max - t_ref) / 3.6e6; }
};

struct SystemParams {
  double delta = 0.25;
  int horizon_steps = 96;

  double rho_c = 0.95;
  double rho_d = 0.95;
  double b_min = 0.9;
  double b_max = 3.0;
  double f_b_max = 3.0;

  double h_max = TankConversion{}.h_max_kwh();
  double f_h_max = 3.0;
  double beta_h = 0.9;

  double f_t_max = 6.0;
  R6C2Params r6c2;

  double kappa = 1.0;          ///< terminal stock penalty (EUR/kWh)
  double pi_hw_deficit = 2.0;  ///< unserved hot water (EUR/kWh)

  // Per-step series, length horizon_steps + 1.
  std::vector<double> theta_o;    ///< outdoor temperature (degC)
  std::vector<double> p_int;      ///< solar gains through windows (kW)
  std::vector<double> p_ext;      ///< solar gains on walls (kW)
  std::vector<double> pi_e;       ///< electricity price (EUR/kWh)
  std::vector<double> pi_d;       ///< discomfort price (EUR/degC per step)
  std::vector<double> theta_set;  ///< comfort setpoint (degC)

  /// Throws ValidationError naming the first offending field.
  void validate() const;

  double hour_of_step(int t) const { return static_cast<double>(t) * delta; }
};

/// Default parameters with time-of-use tariff, night setback and constant
/// weather. Series are sized for `horizon_steps`.
SystemParams default_system_params(int horizon_steps = 96, double delta = 0.25);

/// Linear form of the envelope equations, as per-hour rates:
///   d theta_w/dt = a_ww theta_w + a_wi theta_i + g_w f_t + e_w[t]
///   d theta_i/dt = a_iw theta_w + a_ii theta_i + g_i f_t + e_i[t]
struct ThermalCoefficients {
  double a_ww = 0.0;
  double a_wi = 0.0;
  double a_iw = 0.0;
  double a_ii = 0.0;
  double g_w = 0.0;
  double g_i = 0.0;
};

ThermalCoefficients thermal_coefficients(const SystemParams& p);

/// Exogenous part (outdoor exchange and solar gains) of the envelope rates at step t.
std::array<double, 2> thermal_exogenous_rate(const SystemParams& p, int t);

/// (max(0, f), max(0, -f)). Throws std::domain_error on non-finite input.
std::pair<double, double> split_flow(double f);

/// Right-hand side F(t, x, u, w) of the continuous state equation.
State continuous_dynamics(int t, const State& x, const Control& u, const Uncertainty& w, const SystemParams& p);

/// Per-component bounds keeping the stocks admissible after one step.
ControlBox admissible_controls(const State& x, const SystemParams& p);

/// Power the tank could not deliver over the step (kW). Zero unless the
/// draw exceeds the stored energy plus the heating of the step.
double hot_water_deficit(const State& x, const Control& u, const Uncertainty& w_next, const SystemParams& p);

/// Forward-Euler transition x + delta * F. Unserved hot water leaves the tank
/// empty (h = 0) instead of negative. Throws ConstraintViolation when u is
/// outside admissible_controls(x).
State step(int t, const State& x, const Control& u, const Uncertainty& w_next, const SystemParams& p);

Recourse recourse(const Control& u, const Uncertainty& w_next);

/// pi_e * delta * f_ne + pi_d * max(0, theta_set - theta_i) + deficit penalty.
double stage_cost(int t, const State& x, const Control& u, const Uncertainty& w_next, const SystemParams& p);

/// kappa * (max(0, b0 - bT) + max(0, h0 - hT)); temperatures are not penalized.
double terminal_cost(const State& x_final, const State& x_initial, double kappa);

/// Throws ConstraintViolation when a stock of x is outside its bounds or a
/// component is not finite.
void check_state(const State& x, const SystemParams& p, double tol = kBoundTolerance);

}  // namespace microgrid
