#include "microgrid/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "json.hpp"
#include "microgrid/rng.hpp"

namespace microgrid {

Uncertainty DiscreteDistribution::mean() const {
  Uncertainty m;
  for (std::size_t s = 0; s < points.size(); ++s) {
    m.d_el_net += weights[s] * points[s].d_el_net;
    m.d_hw += weights[s] * points[s].d_hw;
  }
  return m;
}

void DiscreteDistribution::validate() const {
  if (points.empty()) throw ValidationError("distribution", "no points");
  if (points.size() != weights.size()) throw ValidationError("distribution", "points and weights differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("distribution", "weights must be finite and >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("distribution", "weights do not sum to 1");
  for (std::size_t a = 0; a < points.size(); ++a) {
    if (!std::isfinite(points[a].d_el_net) || !std::isfinite(points[a].d_hw)) {
      throw ValidationError("distribution", "non-finite point");
    }
    for (std::size_t b = a + 1; b < points.size(); ++b) {
      if (points[a] == points[b]) throw ValidationError("distribution", "duplicate points");
    }
  }
}

namespace {

double sq_dist(const Uncertainty& a, const Uncertainty& b) {
  const double de = a.d_el_net - b.d_el_net;
  const double dh = a.d_hw - b.d_hw;
  return de * de + dh * dh;
}

bool lex_less(const Uncertainty& a, const Uncertainty& b) {
  return a.d_el_net != b.d_el_net ? a.d_el_net < b.d_el_net : a.d_hw < b.d_hw;
}

std::size_t count_distinct(std::vector<Uncertainty> pts) {
  std::sort(pts.begin(), pts.end(), lex_less);
  return static_cast<std::size_t>(std::unique(pts.begin(), pts.end()) - pts.begin());
}

std::vector<Uncertainty> seed_centers(const std::vector<Uncertainty>& points, std::size_t k, Rng& rng) {
  std::vector<Uncertainty> centers;
  centers.reserve(k);
  centers.push_back(points[rng.index(points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = sq_dist(points[i], centers[0]);
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // Never pick an existing center (possible through rounding).
      while (d2[pick] == 0.0) pick = (pick + 1) % points.size();
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = std::min(d2[i], sq_dist(points[i], centers.back()));
  }
  return centers;
}

}  // namespace

LloydMaxResult lloyd_max(const std::vector<Uncertainty>& points, const LloydMaxOptions& opt) {
  if (points.empty()) throw ValidationError("quantization.points", "no points to quantize");
  if (opt.cells < 1) throw ValidationError("quantization.cells", "must be >= 1");
  if (opt.max_iter < 1) throw ValidationError("quantization.max_iter", "must be >= 1");
  if (!(opt.tol >= 0.0)) throw ValidationError("quantization.tol", "must be >= 0");
  for (const Uncertainty& p : points) {
    if (!std::isfinite(p.d_el_net) || !std::isfinite(p.d_hw)) {
      throw ValidationError("quantization.points", "non-finite point");
    }
  }

  LloydMaxResult result;
  const std::size_t n = points.size();
  std::size_t k = static_cast<std::size_t>(opt.cells);
  const std::size_t distinct = count_distinct(points);
  if (distinct < k) {
    k = distinct;
    result.reduced = true;
  }

  Rng rng(opt.seed);
  std::vector<Uncertainty> centers = seed_centers(points, k, rng);
  std::vector<std::size_t> cell(n);
  std::vector<std::size_t> count(k);

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    // Nearest-centroid assignment.
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = sq_dist(points[i], centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = sq_dist(points[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      cell[i] = best;
      ++count[best];
    }
    // Refill empty cells with the worst-served points.
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (count[cell[i]] < 2) continue;
        const double d = sq_dist(points[i], centers[cell[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == n) break;
      --count[cell[far]];
      cell[far] = c;
      count[c] = 1;
      centers[c] = points[far];
    }
    // Centroid update.
    // Offsets from a member of the cell, so identical points average exactly.
    std::vector<Uncertainty> ref(k), sums(k);
    std::vector<bool> has_ref(k, false);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = cell[i];
      if (!has_ref[c]) {
        ref[c] = points[i];
        has_ref[c] = true;
      }
      sums[c].d_el_net += points[i].d_el_net - ref[c].d_el_net;
      sums[c].d_hw += points[i].d_hw - ref[c].d_hw;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;
      const double m = static_cast<double>(count[c]);
      centers[c] = {ref[c].d_el_net + sums[c].d_el_net / m, ref[c].d_hw + sums[c].d_hw / m};
    }
    double distortion = 0.0;
    for (std::size_t i = 0; i < n; ++i) distortion += sq_dist(points[i], centers[cell[i]]);
    distortion /= static_cast<double>(n);

    result.iterations = iter + 1;
    const bool stop = !result.distortion.empty() &&
                      (result.distortion.back() - distortion <= opt.tol * result.distortion.back());
    result.distortion.push_back(distortion);
    if (stop || distortion == 0.0) break;
  }

  // Collect non-empty cells, merging coincident centroids.
  DiscreteDistribution& dist = result.distribution;
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] == 0) continue;
    const double w = static_cast<double>(count[c]) / static_cast<double>(n);
    auto same = std::find(dist.points.begin(), dist.points.end(), centers[c]);
    if (same != dist.points.end()) {
      dist.weights[static_cast<std::size_t>(same - dist.points.begin())] += w;
    } else {
      dist.points.push_back(centers[c]);
      dist.weights.push_back(w);
    }
  }
  return result;
}

StageDistributions quantize_stagewise(const OptimizationScenarios& opt, const LloydMaxOptions& params) {
  const ScenarioSet& set = opt.set();
  if (set.empty()) throw ValidationError("scenarios", "no optimization scenarios to quantize");
  const int steps = set.horizon_steps();
  StageDistributions out;
  out.stages.reserve(static_cast<std::size_t>(steps));
  std::vector<Uncertainty> column(set.size());
  for (int t = 1; t <= steps; ++t) {
    for (std::size_t s = 0; s < set.size(); ++s) column[s] = set.data[s][static_cast<std::size_t>(t)];
    LloydMaxOptions stage = params;
    stage.seed = derive_seed(params.seed, static_cast<std::uint64_t>(t));
    LloydMaxResult r = lloyd_max(column, stage);
    out.stages.push_back(std::move(r.distribution));
    out.reduced.push_back(r.reduced);
  }
  return out;
}

void write_distributions(std::ostream& out, const StageDistributions& d) {
  nlohmann::json arr = nlohmann::json::array();
  for (int t = 1; t <= d.horizon_steps(); ++t) {
    const DiscreteDistribution& dist = d.at(t);
    nlohmann::json points = nlohmann::json::array();
    for (const Uncertainty& w : dist.points) points.push_back({w.d_el_net, w.d_hw});
    arr.push_back({{"t", t}, {"points", points}, {"weights", dist.weights}});
  }
  out << arr.dump(2) << '\n';
}

StageDistributions read_distributions(std::istream& in, const std::string& source) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, e.what());
  }
  if (!arr.is_array()) throw ParseError(source, 0, "expected a JSON array");
  StageDistributions out;
  int expected_t = 1;
  for (const auto& item : arr) {
    try {
      if (item.at("t").get<int>() != expected_t) throw ParseError(source, 0, "stages must be listed t = 1, 2, ...");
      DiscreteDistribution dist;
      for (const auto& p : item.at("points")) dist.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      dist.weights = item.at("weights").get<std::vector<double>>();
      dist.validate();
      out.stages.push_back(std::move(dist));
      out.reduced.push_back(false);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, 0, "stage " + std::to_string(expected_t) + ": " + e.what());
    }
    ++expected_t;
  }
  return out;
}

}  // namespace microgrid
