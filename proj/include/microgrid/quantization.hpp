#pragma once

// Lloyd-Max quantization of per-stage noise samples into discrete laws.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "microgrid/model.hpp"
#include "microgrid/scenarios.hpp"

namespace microgrid {

struct DiscreteDistribution {
  std::vector<Uncertainty> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  Uncertainty mean() const;

  /// Non-empty, matching lengths, weights >= 0 summing to 1 within 1e-12,
  /// distinct finite points. Throws ValidationError.
  void validate() const;

  static DiscreteDistribution dirac(const Uncertainty& w) { return {{w}, {1.0}}; }

  bool operator==(const DiscreteDistribution&) const = default;
};

struct LloydMaxOptions {
  int cells = 20;
  double tol = 1e-6;  ///< stop when the relative distortion decrease falls below
  int max_iter = 200;
  std::uint64_t seed = 0;
};

struct LloydMaxResult {
  DiscreteDistribution distribution;
  std::vector<double> distortion;  ///< mean squared error after each centroid update
  int iterations = 0;
  bool reduced = false;  ///< fewer distinct points than requested cells
};

/// k-means on the (d_el_net, d_hw) plane with k-means++ seeding. Ties in
/// the nearest-centroid assignment go to the lowest cell index; a cell left
/// empty receives the point farthest from its current centroid.
LloydMaxResult lloyd_max(const std::vector<Uncertainty>& points, const LloydMaxOptions& opt);

/// Noise laws for stages 1..T: element k describes w_{k+1}.
struct StageDistributions {
  std::vector<DiscreteDistribution> stages;
  std::vector<bool> reduced;

  int horizon_steps() const { return static_cast<int>(stages.size()); }
  /// Law of w_t for t in [1, T].
  const DiscreteDistribution& at(int t) const { return stages.at(static_cast<std::size_t>(t - 1)); }
};

/// Quantizes each stage's samples independently; the stage-t seed is
/// derived from (seed, t).
StageDistributions quantize_stagewise(const OptimizationScenarios& opt, const LloydMaxOptions& opt_params);

/// `[{ "t": k, "points": [[d_el_net, d_hw]...], "weights": [...] }, ...]`
void write_distributions(std::ostream& out, const StageDistributions& d);
StageDistributions read_distributions(std::istream& in, const std::string& source = "<stream>");

}  // namespace microgrid
