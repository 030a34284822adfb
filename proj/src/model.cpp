#include "microgrid/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace microgrid {

namespace {

constexpr double kSecondsPerHour = 3600.0;
constexpr double kWattsPerKw = 1000.0;

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) {
    throw ValidationError(field, message);
  }
}

void require_positive(double v, const char* field) {
  require(std::isfinite(v) && v > 0.0, field, "must be finite and > 0");
}

void require_nonnegative(double v, const char* field) {
  require(std::isfinite(v) && v >= 0.0, field, "must be finite and >= 0");
}

void require_series(const std::vector<double>& s, std::size_t n, const char* field, bool positive) {
  require(s.size() == n, field, "expected " + std::to_string(n) + " values, got " + std::to_string(s.size()));
  for (double v : s) {
    require(std::isfinite(v), field, "contains a non-finite value");
    if (positive) {
      require(v > 0.0, field, "values must be > 0");
    }
  }
}

}  // namespace

void SystemParams::validate() const {
  require(std::isfinite(delta) && delta > 0.0, "system.delta", "time step must be > 0");
  require(horizon_steps >= 1, "system.horizon_steps", "must be >= 1");
  require(std::isfinite(rho_c) && rho_c > 0.0 && rho_c <= 1.0, "system.rho_c", "must lie in (0, 1]");
  require(std::isfinite(rho_d) && rho_d > 0.0 && rho_d <= 1.0, "system.rho_d", "must lie in (0, 1]");
  require_nonnegative(b_min, "system.b_min");
  require(std::isfinite(b_max) && b_max > b_min, "system.b_max", "must be > b_min");
  require_nonnegative(f_b_max, "system.f_b_max");
  require_nonnegative(h_max, "system.h_max");
  require_nonnegative(f_h_max, "system.f_h_max");
  require_positive(beta_h, "system.beta_h");
  require_nonnegative(f_t_max, "system.f_t_max");
  require_positive(r6c2.r_i, "system.r6c2.r_i");
  require_positive(r6c2.r_s, "system.r6c2.r_s");
  require_positive(r6c2.r_m, "system.r6c2.r_m");
  require_positive(r6c2.r_e, "system.r6c2.r_e");
  require_positive(r6c2.r_v, "system.r6c2.r_v");
  require_positive(r6c2.r_f, "system.r6c2.r_f");
  require_positive(r6c2.c_i, "system.r6c2.c_i");
  require_positive(r6c2.c_m, "system.r6c2.c_m");
  require(std::isfinite(r6c2.gamma) && r6c2.gamma >= 0.0 && r6c2.gamma <= 1.0, "system.r6c2.gamma",
          "must lie in [0, 1]");
  require_positive(kappa, "system.kappa");
  require_positive(pi_hw_deficit, "system.pi_hw_deficit");

  const auto n = static_cast<std::size_t>(horizon_steps) + 1;
  require_series(theta_o, n, "system.theta_o", false);
  require_series(p_int, n, "system.p_int", false);
  require_series(p_ext, n, "system.p_ext", false);
  require_series(pi_e, n, "system.pi_e", true);
  require_series(pi_d, n, "system.pi_d", true);
  require_series(theta_set, n, "system.theta_set", false);
}

SystemParams default_system_params(int horizon_steps, double delta) {
  SystemParams p;
  p.horizon_steps = horizon_steps;
  p.delta = delta;
  const auto n = static_cast<std::size_t>(horizon_steps) + 1;
  p.theta_o.assign(n, 10.0);
  p.p_int.assign(n, 0.0);
  p.p_ext.assign(n, 0.0);
  p.pi_e.resize(n);
  p.pi_d.assign(n, 0.1);
  p.theta_set.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double hour = std::fmod(static_cast<double>(t) * delta, 24.0);
    p.pi_e[t] = (hour >= 7.0 && hour < 23.0) ? 0.18 : 0.13;
    p.theta_set[t] = hour < 6.0 ? 16.0 : 20.0;
  }
  return p;
}

ThermalCoefficients thermal_coefficients(const SystemParams& p) {
  const auto& r = p.r6c2;
  const double g_iw = 1.0 / (r.r_i + r.r_s);
  const double g_wo = 1.0 / (r.r_m + r.r_e);
  const double g_io = 1.0 / r.r_v + 1.0 / r.r_f;
  const double kw = kSecondsPerHour / r.c_m;
  const double ki = kSecondsPerHour / r.c_i;

  ThermalCoefficients c;
  c.a_ww = -kw * (g_iw + g_wo);
  c.a_wi = kw * g_iw;
  c.a_iw = ki * g_iw;
  c.a_ii = -ki * (g_iw + g_io);
  c.g_w = kw * kWattsPerKw * r.gamma;
  c.g_i = ki * kWattsPerKw * (1.0 - r.gamma);
  return c;
}

std::array<double, 2> thermal_exogenous_rate(const SystemParams& p, int t) {
  const auto& r = p.r6c2;
  const auto i = static_cast<std::size_t>(t);
  const double theta_o = p.theta_o[i];
  const double wall = theta_o / (r.r_m + r.r_e) + kWattsPerKw * (r.r_i / (r.r_i + r.r_s) * p.p_int[i] +
                                                                  r.r_e / (r.r_e + r.r_m) * p.p_ext[i]);
  const double indoor =
      theta_o / r.r_v + theta_o / r.r_f + kWattsPerKw * (r.r_s / (r.r_i + r.r_s)) * p.p_int[i];
  return {kSecondsPerHour / r.c_m * wall, kSecondsPerHour / r.c_i * indoor};
}

std::pair<double, double> split_flow(double f) {
  if (!std::isfinite(f)) {
    throw std::domain_error("split_flow: non-finite flow");
  }
  return {std::max(0.0, f), std::max(0.0, -f)};
}

State continuous_dynamics(int t, const State& x, const Control& u, const Uncertainty& w, const SystemParams& p) {
  const auto [charge, discharge] = split_flow(u.f_b);
  const ThermalCoefficients c = thermal_coefficients(p);
  const auto exo = thermal_exogenous_rate(p, t);

  State rate;
  rate.b = p.rho_c * charge - discharge / p.rho_d;
  rate.h = p.beta_h * u.f_h - w.d_hw;
  rate.theta_w = c.a_ww * x.theta_w + c.a_wi * x.theta_i + c.g_w * u.f_t + exo[0];
  rate.theta_i = c.a_iw * x.theta_w + c.a_ii * x.theta_i + c.g_i * u.f_t + exo[1];
  return rate;
}

void check_state(const State& x, const SystemParams& p, double tol) {
  for (double v : x.as_array()) {
    if (!std::isfinite(v)) {
      throw ConstraintViolation("state finite", v, 0.0);
    }
  }
  if (x.b < p.b_min - tol) throw ConstraintViolation("b >= b_min", x.b, p.b_min);
  if (x.b > p.b_max + tol) throw ConstraintViolation("b <= b_max", x.b, p.b_max);
  if (x.h < -tol) throw ConstraintViolation("h >= 0", x.h, 0.0);
  if (x.h > p.h_max + tol) throw ConstraintViolation("h <= h_max", x.h, p.h_max);
}

ControlBox admissible_controls(const State& x, const SystemParams& p) {
  check_state(x, p);
  const double room_b = std::max(0.0, p.b_max - x.b);
  const double avail_b = std::max(0.0, x.b - p.b_min);
  const double room_h = std::max(0.0, p.h_max - x.h);

  ControlBox box;
  box.f_b = {-std::min(p.f_b_max, p.rho_d * avail_b / p.delta), std::min(p.f_b_max, room_b / (p.delta * p.rho_c))};
  box.f_t = {0.0, p.f_t_max};
  box.f_h = {0.0, std::min(p.f_h_max, room_h / (p.delta * p.beta_h))};
  return box;
}

double hot_water_deficit(const State& x, const Control& u, const Uncertainty& w_next, const SystemParams& p) {
  const double level = x.h + p.delta * (p.beta_h * u.f_h - w_next.d_hw);
  return level < 0.0 ? -level / p.delta : 0.0;
}

State step(int t, const State& x, const Control& u, const Uncertainty& w_next, const SystemParams& p) {
  const ControlBox box = admissible_controls(x, p);
  if (!box.f_b.contains(u.f_b)) {
    throw ConstraintViolation(u.f_b > box.f_b.hi ? "f_b charge bound" : "f_b discharge bound", u.f_b,
                              u.f_b > box.f_b.hi ? box.f_b.hi : box.f_b.lo);
  }
  if (!box.f_t.contains(u.f_t)) {
    throw ConstraintViolation("f_t bound", u.f_t, u.f_t > box.f_t.hi ? box.f_t.hi : box.f_t.lo);
  }
  if (!box.f_h.contains(u.f_h)) {
    throw ConstraintViolation("f_h bound", u.f_h, u.f_h > box.f_h.hi ? box.f_h.hi : box.f_h.lo);
  }

  const State rate = continuous_dynamics(t, x, u, w_next, p);
  State next{x.b + p.delta * rate.b, x.h + p.delta * rate.h, x.theta_w + p.delta * rate.theta_w,
             x.theta_i + p.delta * rate.theta_i};
  if (next.h < 0.0) {
    next.h = 0.0;
  }
  return next;
}

Recourse recourse(const Control& u, const Uncertainty& w_next) {
  const double net = u.f_b + u.f_t + u.f_h + w_next.d_el_net;
  return {std::max(0.0, net), std::max(0.0, -net)};
}

double stage_cost(int t, const State& x, const Control& u, const Uncertainty& w_next, const SystemParams& p) {
  const auto i = static_cast<std::size_t>(t);
  const Recourse r = recourse(u, w_next);
  const double discomfort = std::max(0.0, p.theta_set[i] - x.theta_i);
  const double deficit = hot_water_deficit(x, u, w_next, p);
  return p.pi_e[i] * p.delta * r.f_ne + p.pi_d[i] * discomfort + p.pi_hw_deficit * p.delta * deficit;
}

double terminal_cost(const State& x_final, const State& x_initial, double kappa) {
  return kappa * (std::max(0.0, x_initial.b - x_final.b) + std::max(0.0, x_initial.h - x_final.h));
}

}  // namespace microgrid
