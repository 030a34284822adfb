#pragma once

// Uncertainty scenarios: synthetic generation, CSV storage, labeled
// optimization/assessment sets, and the AR(1) forecaster used by MPC.
//
// Indexing: a scenario holds w_0 ... w_T. w_{t+1} is the noise realized
// during step t (between decision t and decision t+1); w_0 is the value
// observed before the first decision.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "microgrid/model.hpp"

namespace microgrid {

using Scenario = std::vector<Uncertainty>;

struct ScenarioSet {
  std::vector<Scenario> data;

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  /// Number of steps T (scenario length minus one); 0 when empty.
  int horizon_steps() const { return data.empty() ? 0 : static_cast<int>(data.front().size()) - 1; }

  /// Throws ValidationError on ragged lengths, negative or non-finite values.
  void validate() const;

  bool operator==(const ScenarioSet&) const = default;
};

struct OptimizationTag {};
struct AssessmentTag {};

/// A ScenarioSet whose role is fixed by its type. Statistical models (AR
/// fit, quantization, SDDP training) only accept optimization scenarios and
/// the assessment harness only accepts assessment scenarios, so the two
/// cannot be mixed up by accident.
template <class Tag>
class LabeledScenarios {
 public:
  LabeledScenarios() = default;
  explicit LabeledScenarios(ScenarioSet set) : set_(std::move(set)) { set_.validate(); }

  const ScenarioSet& set() const { return set_; }
  const Scenario& operator[](std::size_t i) const { return set_.data[i]; }
  std::size_t size() const { return set_.size(); }
  int horizon_steps() const { return set_.horizon_steps(); }

 private:
  ScenarioSet set_;
};

using OptimizationScenarios = LabeledScenarios<OptimizationTag>;
using AssessmentScenarios = LabeledScenarios<AssessmentTag>;

// ---------------------------------------------------------------------------
// Synthetic generator

/// Daily profile shape of the synthetic household. Electrical demand is a
/// night base load plus three Gaussian activity peaks with random amplitude
/// and timing, AR(1) multiplicative noise and random appliance spikes.
/// Hot water comes as shower draws in morning and evening windows plus small
/// daytime draws. PV is a bell around solar noon scaled to a daily energy.
struct GeneratorConfig {
  int horizon_steps = 96;
  double delta = 0.25;

  double base_kw = 0.15;
  double morning_peak_kw = 0.6;
  double morning_hour = 7.5;
  double morning_width_h = 0.75;
  double midday_peak_kw = 1.2;
  double midday_hour = 12.5;
  double midday_width_h = 1.0;
  double evening_peak_kw = 1.8;
  double evening_hour = 20.0;
  double evening_width_h = 1.25;

  double amplitude_sigma = 0.25;  ///< lognormal sigma of each peak amplitude
  double time_shift_sd_h = 0.4;   ///< std of each peak's timing
  double noise_ar = 0.7;          ///< AR(1) coefficient of multiplicative noise
  double noise_sd = 0.1;
  double spike_rate_per_h = 0.25;  ///< appliance spikes between 07:00 and 23:00
  double spike_kw = 1.5;           ///< mean spike power (exponential)

  double shower_count_morning = 1.0;  ///< Poisson mean in 06:30-08:30
  double shower_count_evening = 0.8;  ///< Poisson mean in 19:00-22:30
  double shower_kwh_min = 1.0;
  double shower_kwh_max = 2.5;
  double small_draw_prob = 0.08;  ///< per daytime step
  double small_draw_kw = 0.3;

  double pv_daily_kwh = 8.0;
  double pv_noon_hour = 13.0;
  double pv_width_h = 2.5;
  double cloud_min = 0.5;  ///< daily cloud factor drawn in [cloud_min, 1]
  double pv_noise_sd = 0.15;

  /// Throws ValidationError (field "generator.<name>").
  void validate() const;
};

/// n scenarios of length horizon_steps + 1; scenario i depends only on
/// (seed, i).
ScenarioSet generate_scenarios(const GeneratorConfig& cfg, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CSV storage: header `scenario,t,d_el_net,d_hw`, one row per (scenario, t).

void write_scenarios(std::ostream& out, const ScenarioSet& set);
/// `source` names the stream in ParseError messages.
ScenarioSet read_scenarios(std::istream& in, const std::string& source = "<stream>");

void save_scenarios(const ScenarioSet& set, const std::string& path);
/// Throws FileError when the file cannot be opened, ParseError on
/// malformed content.
ScenarioSet load_scenarios(const std::string& path);

// ---------------------------------------------------------------------------
// AR(1) forecaster, fitted separately for each step and component:
//   d_{t+1} = alpha_t d_t + beta_t + eps_t

struct ArModel {
  static constexpr std::size_t kElectric = 0;
  static constexpr std::size_t kHotWater = 1;

  std::vector<std::array<double, 2>> alpha;      ///< [t][component], t in [0, T)
  std::vector<std::array<double, 2>> beta;
  std::vector<std::array<double, 2>> resid_std;
  std::vector<std::array<bool, 2>> fallback;     ///< regressor had zero variance

  int horizon_steps() const { return static_cast<int>(alpha.size()); }
};

/// Least-squares fit over the scenarios; needs at least two of them.
ArModel fit_ar(const OptimizationScenarios& opt);

/// Per-step sample means, length T + 1.
std::vector<Uncertainty> stage_means(const OptimizationScenarios& opt);

/// Forecast of w_{t+1} ... w_T given the observed w_t: AR step for t+1,
/// offline means afterwards. Hot-water forecasts are clamped at 0.
std::vector<Uncertainty> update_forecast(const ArModel& ar, int t, const Uncertainty& observed,
                                         const std::vector<Uncertainty>& means);

}  // namespace microgrid
