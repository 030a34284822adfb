#include "microgrid/assess.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "microgrid/errors.hpp"
#include "microgrid/rng.hpp"

namespace microgrid {

namespace {

constexpr double kBalanceTolerance = 1e-12;

}  // namespace

std::pair<OptimizationScenarios, AssessmentScenarios> split_scenarios(const ScenarioSet& all, std::size_t n_opt,
                                                                      std::uint64_t seed) {
  if (n_opt < 1 || n_opt >= all.size()) {
    throw ValidationError("assessment.n_opt", "must satisfy 1 <= n_opt < number of scenarios (" +
                                                  std::to_string(all.size()) + ")");
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_opt));
  std::vector<std::size_t> second(order.begin() + static_cast<std::ptrdiff_t>(n_opt), order.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  ScenarioSet opt, assess;
  for (std::size_t i : first) opt.data.push_back(all.data[i]);
  for (std::size_t i : second) assess.data.push_back(all.data[i]);
  return {OptimizationScenarios(std::move(opt)), AssessmentScenarios(std::move(assess))};
}

SimulationResult simulate_policy(Policy& policy, const Scenario& scenario, const State& x0, const SystemParams& p,
                                 bool record) {
  const int steps = p.horizon_steps;
  if (scenario.size() != static_cast<std::size_t>(steps) + 1) {
    throw std::invalid_argument("simulate_policy: scenario length must be T + 1");
  }
  check_state(x0, p);
  policy.reset();

  SimulationResult result;
  if (record) result.trajectory.states.push_back(x0);
  State x = x0;
  for (int t = 0; t < steps; ++t) {
    const auto tu = static_cast<std::size_t>(t);
    const auto start = std::chrono::steady_clock::now();
    const Control u = policy.decide(t, x, scenario[tu]).control;
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.decision_seconds += seconds;
    result.max_decision_seconds = std::max(result.max_decision_seconds, seconds);

    const Uncertainty& w = scenario[tu + 1];
    const Recourse r = recourse(u, w);
    const double imbalance = (r.f_ne - r.spill) - (w.d_el_net + u.f_b + u.f_t + u.f_h);
    if (std::abs(imbalance) > kBalanceTolerance) {
      throw ConstraintViolation("load balance", imbalance, kBalanceTolerance);
    }
    const double cost = stage_cost(t, x, u, w, p);
    result.cost += cost;
    x = step(t, x, u, w, p);  // rejects inadmissible controls
    check_state(x, p);
    if (record) {
      result.trajectory.states.push_back(x);
      result.trajectory.controls.push_back(u);
      result.trajectory.recourse.push_back(r);
      result.trajectory.stage_costs.push_back(cost);
    }
  }
  result.cost += terminal_cost(x, x0, p.kappa);
  return result;
}

SampleStats sample_stats(std::span<const double> values) {
  SampleStats s;
  s.n = values.size();
  if (values.empty()) return s;
  // Two passes on values shifted by the first one: equal values give an
  // exactly zero spread.
  const double n = static_cast<double>(values.size());
  const double ref = values.front();
  double shift = 0.0;
  for (double v : values) shift += v - ref;
  shift /= n;
  s.mean = ref + shift;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - ref - shift) * (v - ref - shift);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  s.ci95 = 1.96 * s.std / std::sqrt(n);
  return s;
}

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("make_histogram: bins must be >= 1");
  Histogram h;
  h.counts.assign(bins, 0);
  if (values.empty()) return h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.lo = *lo;
  h.width = (*hi - *lo) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t k = 0;
    if (h.width > 0.0) k = std::min(bins - 1, static_cast<std::size_t>((v - h.lo) / h.width));
    ++h.counts[k];
  }
  return h;
}

const PolicySummary& AssessmentReport::policy(const std::string& name) const {
  for (const auto& s : policies) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("no policy named " + name);
}

const Comparison& AssessmentReport::comparison(const std::string& a, const std::string& b) const {
  for (const auto& c : comparisons) {
    if (c.a == a && c.b == b) return c;
  }
  throw std::out_of_range("no comparison " + a + " vs " + b);
}

AssessmentReport summarize(std::vector<PolicySummary> policies, int horizon_steps) {
  AssessmentReport r;
  r.horizon_steps = horizon_steps;
  if (!policies.empty()) r.scenarios = policies.front().costs.size();
  for (const auto& s : policies) {
    if (s.costs.size() != r.scenarios) throw std::invalid_argument("summarize: cost vectors differ in length");
  }
  r.policies = std::move(policies);
  for (auto& s : r.policies) s.stats = sample_stats(s.costs);

  for (std::size_t i = 0; i < r.policies.size(); ++i) {
    for (std::size_t j = i + 1; j < r.policies.size(); ++j) {
      Comparison c;
      c.a = r.policies[i].name;
      c.b = r.policies[j].name;
      std::size_t wins = 0;
      for (std::size_t k = 0; k < r.scenarios; ++k) {
        c.gaps.push_back(r.policies[i].costs[k] - r.policies[j].costs[k]);
        if (r.policies[i].costs[k] < r.policies[j].costs[k]) ++wins;
      }
      c.gap_stats = sample_stats(c.gaps);
      c.win_fraction = r.scenarios ? static_cast<double>(wins) / static_cast<double>(r.scenarios) : 0.0;
      c.histogram = make_histogram(c.gaps);
      r.comparisons.push_back(std::move(c));
    }
  }
  return r;
}

AssessmentReport run_assessment(const std::vector<std::unique_ptr<Policy>>& policies,
                                const AssessmentScenarios& scenarios, const State& x0, const SystemParams& p,
                                const AssessmentOptions& options) {
  if (scenarios.size() < 2) throw ValidationError("assessment.n_sim", "need at least two assessment scenarios");
  if (scenarios.horizon_steps() != p.horizon_steps) {
    throw ValidationError("assessment", "scenario length does not match system.horizon_steps");
  }
  if (policies.empty()) throw std::invalid_argument("run_assessment: no policies");

  const std::size_t n = scenarios.size();
  const std::size_t m = policies.size();
  std::vector<PolicySummary> out(m);
  std::vector<std::vector<double>> seconds(m, std::vector<double>(n));
  std::vector<std::vector<double>> max_seconds(m, std::vector<double>(n));
  for (std::size_t k = 0; k < m; ++k) {
    out[k].name = policies[k]->name();
    out[k].costs.assign(n, 0.0);
    if (options.record_trajectories) out[k].trajectories.resize(n);
  }

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    try {
      std::vector<std::unique_ptr<Policy>> mine;
      for (const auto& pol : policies) mine.push_back(pol->clone());
      for (std::size_t s = next++; s < n; s = next++) {
        for (std::size_t k = 0; k < m; ++k) {
          SimulationResult r = simulate_policy(*mine[k], scenarios[s], x0, p, options.record_trajectories);
          out[k].costs[s] = r.cost;
          seconds[k][s] = r.decision_seconds;
          max_seconds[k][s] = r.max_decision_seconds;
          if (options.record_trajectories) out[k].trajectories[s] = std::move(r.trajectory);
        }
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n;
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const double decisions = static_cast<double>(n) * p.horizon_steps;
  for (std::size_t k = 0; k < m; ++k) {
    out[k].mean_decision_ms = 1e3 * std::accumulate(seconds[k].begin(), seconds[k].end(), 0.0) / decisions;
    out[k].max_decision_ms = 1e3 * *std::max_element(max_seconds[k].begin(), max_seconds[k].end());
  }
  return summarize(std::move(out), p.horizon_steps);
}

// ---------------------------------------------------------------------------

void write_report_json(std::ostream& out, const AssessmentReport& r) {
  using nlohmann::json;
  auto stats = [](const SampleStats& s) { return json{{"mean", s.mean}, {"std", s.std}, {"ci95", s.ci95}}; };
  json doc;
  doc["scenarios"] = r.scenarios;
  doc["horizon_steps"] = r.horizon_steps;
  doc["policies"] = json::array();
  for (const auto& s : r.policies) {
    json item = stats(s.stats);
    item["name"] = s.name;
    item["mean_decision_ms"] = s.mean_decision_ms;
    item["max_decision_ms"] = s.max_decision_ms;
    doc["policies"].push_back(item);
  }
  doc["comparisons"] = json::array();
  for (const auto& c : r.comparisons) {
    json item;
    item["a"] = c.a;
    item["b"] = c.b;
    item["gap"] = stats(c.gap_stats);
    item["win_fraction"] = c.win_fraction;
    item["histogram"] = {{"lo", c.histogram.lo}, {"width", c.histogram.width}, {"counts", c.histogram.counts}};
    doc["comparisons"].push_back(item);
  }
  out << doc.dump(2) << '\n';
}

void write_costs_csv(std::ostream& out, const AssessmentReport& r) {
  const auto old_precision = out.precision(17);
  out << "scenario,policy,cost\n";
  for (std::size_t s = 0; s < r.scenarios; ++s) {
    for (const auto& pol : r.policies) out << s << ',' << pol.name << ',' << pol.costs[s] << '\n';
  }
  out.precision(old_precision);
}

void write_gaps_csv(std::ostream& out, const AssessmentReport& r) {
  const auto old_precision = out.precision(17);
  out << "scenario,a,b,gap\n";
  for (const auto& c : r.comparisons) {
    for (std::size_t s = 0; s < c.gaps.size(); ++s) out << s << ',' << c.a << ',' << c.b << ',' << c.gaps[s] << '\n';
  }
  out.precision(old_precision);
}

void write_histogram_csv(std::ostream& out, const AssessmentReport& r) {
  const auto old_precision = out.precision(17);
  out << "a,b,bin,lo,hi,count\n";
  for (const auto& c : r.comparisons) {
    const Histogram& h = c.histogram;
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
      const double lo = h.lo + h.width * static_cast<double>(k);
      out << c.a << ',' << c.b << ',' << k << ',' << lo << ',' << lo + h.width << ',' << h.counts[k] << '\n';
    }
  }
  out.precision(old_precision);
}

void write_trajectories_csv(std::ostream& out, const PolicySummary& s) {
  const auto old_precision = out.precision(17);
  out << "scenario,t,b,h,theta_w,theta_i,f_ne\n";
  for (std::size_t sc = 0; sc < s.trajectories.size(); ++sc) {
    const Trajectory& tr = s.trajectories[sc];
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
      const State& x = tr.states[t];
      out << sc << ',' << t << ',' << x.b << ',' << x.h << ',' << x.theta_w << ',' << x.theta_i << ',';
      if (t < tr.recourse.size()) out << tr.recourse[t].f_ne;
      out << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace microgrid
