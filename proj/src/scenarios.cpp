#include "microgrid/scenarios.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "microgrid/rng.hpp"

namespace microgrid {

void ScenarioSet::validate() const {
  if (data.empty()) return;
  const std::size_t len = data.front().size();
  if (len < 2) throw ValidationError("scenarios", "scenarios need at least two time points");
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (data[s].size() != len) {
      throw ValidationError("scenarios", "scenario " + std::to_string(s) + " has length " +
                                             std::to_string(data[s].size()) + ", expected " + std::to_string(len));
    }
    for (const Uncertainty& w : data[s]) {
      if (!std::isfinite(w.d_el_net) || !std::isfinite(w.d_hw)) {
        throw ValidationError("scenarios", "scenario " + std::to_string(s) + " has a non-finite value");
      }
      if (w.d_hw < 0.0) {
        throw ValidationError("scenarios", "scenario " + std::to_string(s) + " has negative hot-water demand");
      }
    }
  }
}

// ---------------------------------------------------------------------------

void GeneratorConfig::validate() const {
  auto nonneg = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError(std::string("generator.") + name, "must be >= 0");
  };
  auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) throw ValidationError(std::string("generator.") + name, "must be > 0");
  };
  auto hour = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0 || v > 24.0) {
      throw ValidationError(std::string("generator.") + name, "must be an hour in [0, 24]");
    }
  };
  if (horizon_steps < 1) throw ValidationError("generator.horizon_steps", "must be >= 1");
  positive(delta, "delta");
  nonneg(base_kw, "base_kw");
  nonneg(morning_peak_kw, "morning_peak_kw");
  nonneg(midday_peak_kw, "midday_peak_kw");
  nonneg(evening_peak_kw, "evening_peak_kw");
  hour(morning_hour, "morning_hour");
  hour(midday_hour, "midday_hour");
  hour(evening_hour, "evening_hour");
  positive(morning_width_h, "morning_width_h");
  positive(midday_width_h, "midday_width_h");
  positive(evening_width_h, "evening_width_h");
  nonneg(amplitude_sigma, "amplitude_sigma");
  nonneg(time_shift_sd_h, "time_shift_sd_h");
  if (!std::isfinite(noise_ar) || std::abs(noise_ar) >= 1.0) {
    throw ValidationError("generator.noise_ar", "must lie in (-1, 1)");
  }
  nonneg(noise_sd, "noise_sd");
  nonneg(spike_rate_per_h, "spike_rate_per_h");
  nonneg(spike_kw, "spike_kw");
  nonneg(shower_count_morning, "shower_count_morning");
  nonneg(shower_count_evening, "shower_count_evening");
  nonneg(shower_kwh_min, "shower_kwh_min");
  if (!std::isfinite(shower_kwh_max) || shower_kwh_max < shower_kwh_min) {
    throw ValidationError("generator.shower_kwh_max", "must be >= shower_kwh_min");
  }
  if (!std::isfinite(small_draw_prob) || small_draw_prob < 0.0 || small_draw_prob > 1.0) {
    throw ValidationError("generator.small_draw_prob", "must lie in [0, 1]");
  }
  nonneg(small_draw_kw, "small_draw_kw");
  nonneg(pv_daily_kwh, "pv_daily_kwh");
  hour(pv_noon_hour, "pv_noon_hour");
  positive(pv_width_h, "pv_width_h");
  if (!std::isfinite(cloud_min) || cloud_min < 0.0 || cloud_min > 1.0) {
    throw ValidationError("generator.cloud_min", "must lie in [0, 1]");
  }
  nonneg(pv_noise_sd, "pv_noise_sd");
}

namespace {

double bell(double hour, double center, double width) {
  double d = std::abs(std::fmod(hour, 24.0) - std::fmod(center, 24.0));
  d = std::min(d, 24.0 - d);
  return std::exp(-0.5 * d * d / (width * width));
}

Scenario generate_one(const GeneratorConfig& cfg, Rng& rng) {
  const auto len = static_cast<std::size_t>(cfg.horizon_steps) + 1;
  Scenario w(len);

  struct Peak {
    double amplitude;
    double center;
    double width;
  };
  const double s = cfg.amplitude_sigma;
  auto draw_peak = [&](double kw, double hour, double width) {
    const double amp = kw * std::exp(s * rng.normal() - 0.5 * s * s);
    return Peak{amp, hour + cfg.time_shift_sd_h * rng.normal(), width};
  };
  const Peak peaks[3] = {draw_peak(cfg.morning_peak_kw, cfg.morning_hour, cfg.morning_width_h),
                         draw_peak(cfg.midday_peak_kw, cfg.midday_hour, cfg.midday_width_h),
                         draw_peak(cfg.evening_peak_kw, cfg.evening_hour, cfg.evening_width_h)};

  double noise = cfg.noise_sd / std::sqrt(1.0 - cfg.noise_ar * cfg.noise_ar) * rng.normal();
  for (std::size_t t = 0; t < len; ++t) {
    const double hour = std::fmod(static_cast<double>(t) * cfg.delta, 24.0);
    double profile = cfg.base_kw;
    for (const Peak& p : peaks) profile += p.amplitude * bell(hour, p.center, p.width);
    double demand = profile * std::max(0.0, 1.0 + noise);
    noise = cfg.noise_ar * noise + cfg.noise_sd * rng.normal();
    const bool daytime = hour >= 7.0 && hour < 23.0;
    if (daytime && rng.uniform() < cfg.spike_rate_per_h * cfg.delta) {
      demand += -cfg.spike_kw * std::log(1.0 - rng.uniform());
    }
    w[t].d_el_net = demand;
    if (daytime && rng.uniform() < cfg.small_draw_prob) {
      w[t].d_hw += cfg.small_draw_kw * rng.uniform(0.5, 1.5);
    }
  }

  // Showers: a whole draw lands in a single step.
  auto showers = [&](double mean_count, double from_h, double to_h) {
    const int count = rng.poisson(mean_count);
    for (int k = 0; k < count; ++k) {
      const double hour = rng.uniform(from_h, to_h);
      const double energy = rng.uniform(cfg.shower_kwh_min, cfg.shower_kwh_max);
      const auto t = static_cast<std::size_t>(std::llround(hour / cfg.delta));
      if (t < len) w[t].d_hw += energy / cfg.delta;
    }
  };
  showers(cfg.shower_count_morning, 6.5, 8.5);
  showers(cfg.shower_count_evening, 19.0, 22.5);

  if (cfg.pv_daily_kwh > 0.0) {
    double area = 0.0;
    for (std::size_t t = 1; t < len; ++t) area += cfg.delta * bell(static_cast<double>(t) * cfg.delta, cfg.pv_noon_hour, cfg.pv_width_h);
    const double cloud = rng.uniform(cfg.cloud_min, 1.0);
    const double scale = area > 0.0 ? cfg.pv_daily_kwh / area : 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double shape = bell(static_cast<double>(t) * cfg.delta, cfg.pv_noon_hour, cfg.pv_width_h);
      const double jitter = std::max(0.0, 1.0 + cfg.pv_noise_sd * rng.normal());
      w[t].d_el_net -= scale * shape * cloud * jitter;
    }
  }
  return w;
}

}  // namespace

ScenarioSet generate_scenarios(const GeneratorConfig& cfg, std::size_t n, std::uint64_t seed) {
  cfg.validate();
  if (n == 0) throw ValidationError("generator.count", "must be >= 1");
  ScenarioSet set;
  set.data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    set.data.push_back(generate_one(cfg, rng));
  }
  return set;
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kCsvHeader = "scenario,t,d_el_net,d_hw";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_field(const std::string& text, const std::string& source, std::size_t line, const char* what) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(source, line, std::string("invalid ") + what + " '" + text + "'");
  }
  return value;
}

}  // namespace

void write_scenarios(std::ostream& out, const ScenarioSet& set) {
  out << kCsvHeader << '\n';
  for (std::size_t s = 0; s < set.data.size(); ++s) {
    for (std::size_t t = 0; t < set.data[s].size(); ++t) {
      const Uncertainty& w = set.data[s][t];
      out << s << ',' << t << ',' << format_double(w.d_el_net) << ',' << format_double(w.d_hw) << '\n';
    }
  }
}

ScenarioSet read_scenarios(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(source, line_no, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError(source, line_no, std::string("expected header '") + kCsvHeader + "'");

  ScenarioSet set;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string fields[4];
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (count == 4) throw ParseError(source, line_no, "expected 4 fields");
      fields[count++] = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (count != 4) throw ParseError(source, line_no, "expected 4 fields");
    const auto s = parse_field<std::size_t>(fields[0], source, line_no, "scenario index");
    const auto t = parse_field<std::size_t>(fields[1], source, line_no, "step index");
    const Uncertainty w{parse_field<double>(fields[2], source, line_no, "d_el_net"),
                        parse_field<double>(fields[3], source, line_no, "d_hw")};
    if (!std::isfinite(w.d_el_net) || !std::isfinite(w.d_hw)) throw ParseError(source, line_no, "non-finite value");
    if (w.d_hw < 0.0) throw ParseError(source, line_no, "negative d_hw");

    if (s == set.data.size()) {
      if (t != 0) throw ParseError(source, line_no, "scenario must start at t = 0");
      if (!set.data.empty() && set.data.back().size() != set.data.front().size()) {
        throw ParseError(source, line_no, "previous scenario has a different length");
      }
      set.data.emplace_back();
    } else if (s + 1 != set.data.size()) {
      throw ParseError(source, line_no, "rows must be grouped by scenario in increasing order");
    }
    if (t != set.data.back().size()) throw ParseError(source, line_no, "steps must be consecutive");
    set.data.back().push_back(w);
  }
  if (!set.data.empty() && set.data.back().size() != set.data.front().size()) {
    throw ParseError(source, line_no, "last scenario has a different length");
  }
  if (!set.data.empty() && set.data.front().size() < 2) {
    throw ParseError(source, line_no, "scenarios need at least two time points");
  }
  return set;
}

void save_scenarios(const ScenarioSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileError(path, "cannot write");
  write_scenarios(out, set);
  if (!out) throw FileError(path, "error writing");
}

ScenarioSet load_scenarios(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError(path, "cannot open");
  return read_scenarios(in, path);
}

// ---------------------------------------------------------------------------

ArModel fit_ar(const OptimizationScenarios& opt) {
  const ScenarioSet& set = opt.set();
  if (set.size() < 2) throw ValidationError("scenarios", "AR fit needs at least two scenarios");
  const int steps = set.horizon_steps();
  const double n = static_cast<double>(set.size());

  ArModel ar;
  ar.alpha.resize(static_cast<std::size_t>(steps));
  ar.beta.resize(static_cast<std::size_t>(steps));
  ar.resid_std.resize(static_cast<std::size_t>(steps));
  ar.fallback.resize(static_cast<std::size_t>(steps));

  auto component = [](const Uncertainty& w, std::size_t i) { return i == ArModel::kElectric ? w.d_el_net : w.d_hw; };

  for (int t = 0; t < steps; ++t) {
    const auto tu = static_cast<std::size_t>(t);
    for (std::size_t i = 0; i < 2; ++i) {
      double mx = 0.0;
      double my = 0.0;
      for (const Scenario& sc : set.data) {
        mx += component(sc[tu], i);
        my += component(sc[tu + 1], i);
      }
      mx /= n;
      my /= n;
      double sxx = 0.0;
      double sxy = 0.0;
      for (const Scenario& sc : set.data) {
        const double dx = component(sc[tu], i) - mx;
        sxx += dx * dx;
        sxy += dx * (component(sc[tu + 1], i) - my);
      }
      double a = 0.0;
      double b = my;
      bool degenerate = sxx <= 1e-14 * n * std::max(1.0, mx * mx);
      if (!degenerate) {
        a = sxy / sxx;
        b = my - a * mx;
      }
      double ssr = 0.0;
      for (const Scenario& sc : set.data) {
        const double r = component(sc[tu + 1], i) - a * component(sc[tu], i) - b;
        ssr += r * r;
      }
      const double dof = set.size() > 2 ? n - 2.0 : n;
      ar.alpha[tu][i] = a;
      ar.beta[tu][i] = b;
      ar.resid_std[tu][i] = std::sqrt(ssr / dof);
      ar.fallback[tu][i] = degenerate;
    }
  }
  return ar;
}

std::vector<Uncertainty> stage_means(const OptimizationScenarios& opt) {
  const ScenarioSet& set = opt.set();
  if (set.empty()) throw ValidationError("scenarios", "no scenarios to average");
  std::vector<Uncertainty> means(set.data.front().size());
  for (const Scenario& sc : set.data) {
    for (std::size_t t = 0; t < sc.size(); ++t) {
      means[t].d_el_net += sc[t].d_el_net;
      means[t].d_hw += sc[t].d_hw;
    }
  }
  const double n = static_cast<double>(set.size());
  for (Uncertainty& m : means) {
    m.d_el_net /= n;
    m.d_hw /= n;
  }
  return means;
}

std::vector<Uncertainty> update_forecast(const ArModel& ar, int t, const Uncertainty& observed,
                                         const std::vector<Uncertainty>& means) {
  const int steps = ar.horizon_steps();
  if (t < 0 || t >= steps) throw std::out_of_range("update_forecast: step outside [0, T)");
  if (means.size() != static_cast<std::size_t>(steps) + 1) {
    throw std::invalid_argument("update_forecast: means must have length T + 1");
  }
  const auto tu = static_cast<std::size_t>(t);
  std::vector<Uncertainty> forecast;
  forecast.reserve(static_cast<std::size_t>(steps - t));
  forecast.push_back({ar.alpha[tu][ArModel::kElectric] * observed.d_el_net + ar.beta[tu][ArModel::kElectric],
                      std::max(0.0, ar.alpha[tu][ArModel::kHotWater] * observed.d_hw + ar.beta[tu][ArModel::kHotWater])});
  for (std::size_t k = tu + 2; k <= static_cast<std::size_t>(steps); ++k) {
    forecast.push_back({means[k].d_el_net, std::max(0.0, means[k].d_hw)});
  }
  return forecast;
}

}  // namespace microgrid
