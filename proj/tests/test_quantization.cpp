#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "microgrid/errors.hpp"
#include "microgrid/quantization.hpp"
#include "microgrid/rng.hpp"
#include "oracles.hpp"

using namespace microgrid;

namespace {

std::vector<Uncertainty> line(std::initializer_list<double> xs) {
  std::vector<Uncertainty> pts;
  for (double x : xs) pts.push_back({x, 0.0});
  return pts;
}

// Best two-cell split of 1-D points, by trying every cut of the sorted list.
double best_two_cell_distortion(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  double best = 1e300;
  for (std::size_t cut = 1; cut < xs.size(); ++cut) {
    double total = 0.0;
    for (auto [lo, hi] : {std::pair{std::size_t{0}, cut}, std::pair{cut, xs.size()}}) {
      double m = 0.0;
      for (std::size_t i = lo; i < hi; ++i) m += xs[i];
      m /= static_cast<double>(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) total += (xs[i] - m) * (xs[i] - m);
    }
    best = std::min(best, total);
  }
  return best / static_cast<double>(xs.size());
}

using oracle::random_cloud;

}  // namespace

TEST(LloydMax, FourPointsTwoCells) {
  const auto r = lloyd_max(line({0.0, 0.0, 10.0, 10.0}), {2, 1e-6, 200, 0});
  auto d = r.distribution;
  ASSERT_EQ(d.size(), 2u);
  if (d.points[0].d_el_net > d.points[1].d_el_net) {
    std::swap(d.points[0], d.points[1]);
    std::swap(d.weights[0], d.weights[1]);
  }
  EXPECT_EQ(d.points[0], (Uncertainty{0.0, 0.0}));
  EXPECT_EQ(d.points[1], (Uncertainty{10.0, 0.0}));
  EXPECT_EQ(d.weights[0], 0.5);
  EXPECT_EQ(d.weights[1], 0.5);
  EXPECT_FALSE(r.reduced);
  EXPECT_EQ(r.distortion.back(), best_two_cell_distortion({0.0, 0.0, 10.0, 10.0}));
}

TEST(LloydMax, FourPointsAnySeed) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = lloyd_max(line({0.0, 0.0, 10.0, 10.0}), {2, 1e-6, 200, seed}).distribution;
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(std::min(d.points[0].d_el_net, d.points[1].d_el_net), 0.0);
    EXPECT_EQ(std::max(d.points[0].d_el_net, d.points[1].d_el_net), 10.0);
  }
}

TEST(LloydMax, SingleCellIsTheMean) {
  const auto d = lloyd_max({{1.0, 2.0}, {3.0, 0.0}, {-1.0, 4.0}}, {1, 1e-6, 200, 3}).distribution;
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d.points[0].d_el_net, 1.0);
  EXPECT_DOUBLE_EQ(d.points[0].d_hw, 2.0);
  EXPECT_EQ(d.weights[0], 1.0);
}

TEST(LloydMax, SaturatedQuantizerReturnsThePoints) {
  const std::vector<Uncertainty> pts{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {5.0, 5.0}, {-2.0, 3.0}};
  const auto d = lloyd_max(pts, {5, 1e-6, 200, 8}).distribution;
  ASSERT_EQ(d.size(), pts.size());
  for (const Uncertainty& p : pts) {
    const auto it = std::find(d.points.begin(), d.points.end(), p);
    ASSERT_NE(it, d.points.end());
    EXPECT_DOUBLE_EQ(d.weights[static_cast<std::size_t>(it - d.points.begin())], 0.2);
  }
}

TEST(LloydMax, TooFewDistinctPointsReducesCells) {
  const auto r = lloyd_max(line({1.0, 1.0, 2.0, 2.0, 2.0}), {4, 1e-6, 200, 0});
  EXPECT_TRUE(r.reduced);
  ASSERT_EQ(r.distribution.size(), 2u);
  r.distribution.validate();
}

TEST(LloydMax, RejectsBadInput) {
  EXPECT_THROW(lloyd_max({}, {}), ValidationError);
  EXPECT_THROW(lloyd_max(line({1.0}), {0, 1e-6, 200, 0}), ValidationError);
  EXPECT_THROW(lloyd_max(line({NAN}), {}), ValidationError);
}

TEST(LloydMax, TwoCellOptimumOnSmallLines) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> xs;
    for (int i = 0; i < 8; ++i) xs.push_back(rng.index(2) ? rng.uniform(8.0, 10.0) : rng.uniform(0.0, 2.0));
    std::vector<Uncertainty> pts;
    for (double x : xs) pts.push_back({x, 0.0});
    const auto r = lloyd_max(pts, {2, 0.0, 200, static_cast<std::uint64_t>(trial)});
    // Well separated groups: the local optimum is the global one.
    EXPECT_NEAR(r.distortion.back(), best_two_cell_distortion(xs), 1e-12);
  }
}

TEST(LloydMaxProperty, DistortionNonIncreasing) {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = random_cloud(rng, 50 + rng.index(200));
    const int cells = 2 + static_cast<int>(rng.index(20));
    const auto r = lloyd_max(pts, {cells, 0.0, 300, static_cast<std::uint64_t>(trial)});
    ASSERT_FALSE(r.distortion.empty());
    for (std::size_t i = 1; i < r.distortion.size(); ++i) {
      EXPECT_LE(r.distortion[i], r.distortion[i - 1] * (1.0 + 1e-12)) << "trial " << trial << " iter " << i;
    }
  }
}

TEST(LloydMaxProperty, CentroidsAreCellMeansAndPreserveTheMean) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = random_cloud(rng, 100);
    const auto d = lloyd_max(pts, {20, 1e-6, 200, static_cast<std::uint64_t>(trial)}).distribution;
    d.validate();
    Uncertainty sample{};
    for (const auto& p : pts) {
      sample.d_el_net += p.d_el_net / 100.0;
      sample.d_hw += p.d_hw / 100.0;
    }
    const Uncertainty m = d.mean();
    EXPECT_NEAR(m.d_el_net, sample.d_el_net, 1e-9);
    EXPECT_NEAR(m.d_hw, sample.d_hw, 1e-9);
  }
}

TEST(QuantizeStagewise, ConstantScenariosGiveDiracs) {
  ScenarioSet set;
  set.data.assign(10, Scenario(5, {0.7, 0.2}));
  const auto dists = quantize_stagewise(OptimizationScenarios(set), {});
  ASSERT_EQ(dists.horizon_steps(), 4);
  for (int t = 1; t <= 4; ++t) {
    ASSERT_EQ(dists.at(t).size(), 1u);
    EXPECT_EQ(dists.at(t).points[0], (Uncertainty{0.7, 0.2}));
    EXPECT_EQ(dists.at(t).weights[0], 1.0);
    EXPECT_TRUE(dists.reduced[static_cast<std::size_t>(t - 1)]);
  }
}

TEST(QuantizeStagewise, TwoValuesGiveTheEmpiricalLaw) {
  ScenarioSet set;
  // Stage t takes value +t in 3 scenarios and -t in 1 scenario.
  for (int s = 0; s < 4; ++s) {
    Scenario sc;
    for (int t = 0; t <= 6; ++t) sc.push_back({s < 3 ? double(t) : -double(t), s < 3 ? 0.0 : 1.0});
    set.data.push_back(sc);
  }
  const auto dists = quantize_stagewise(OptimizationScenarios(set), {2, 1e-6, 200, 1});
  for (int t = 1; t <= 6; ++t) {
    const auto& d = dists.at(t);
    ASSERT_EQ(d.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) {
      const bool high = d.points[k].d_el_net > 0.0;
      EXPECT_EQ(d.points[k], (Uncertainty{high ? double(t) : -double(t), high ? 0.0 : 1.0}));
      EXPECT_EQ(d.weights[k], high ? 0.75 : 0.25);
    }
  }
}

TEST(QuantizeStagewise, GeneratedDataSatisfiesInvariants) {
  const OptimizationScenarios opt(generate_scenarios(GeneratorConfig{}, 100, 3));
  const auto dists = quantize_stagewise(opt, {});
  ASSERT_EQ(dists.horizon_steps(), 96);
  for (int t = 1; t <= 96; ++t) {
    const auto& d = dists.at(t);
    d.validate();
    EXPECT_LE(d.size(), 20u);
    double sum = 0.0;
    for (double w : d.weights) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    Uncertainty mean{};
    for (std::size_t s = 0; s < opt.size(); ++s) {
      mean.d_el_net += opt[s][static_cast<std::size_t>(t)].d_el_net / 100.0;
      mean.d_hw += opt[s][static_cast<std::size_t>(t)].d_hw / 100.0;
    }
    EXPECT_NEAR(d.mean().d_el_net, mean.d_el_net, 1e-9);
    EXPECT_NEAR(d.mean().d_hw, mean.d_hw, 1e-9);
  }
  EXPECT_EQ(quantize_stagewise(opt, {}).stages, dists.stages);
}

TEST(DistributionJson, RoundTrip) {
  const OptimizationScenarios opt(generate_scenarios(GeneratorConfig{}, 30, 3));
  const auto dists = quantize_stagewise(opt, {5, 1e-6, 100, 2});
  std::stringstream io;
  write_distributions(io, dists);
  const auto back = read_distributions(io);
  EXPECT_EQ(back.stages, dists.stages);
}

TEST(DistributionJson, RejectsBadDocuments) {
  std::istringstream not_json("{oops");
  EXPECT_THROW(read_distributions(not_json), ParseError);
  std::istringstream bad_weights(R"([{"t": 1, "points": [[0, 0], [1, 0]], "weights": [0.5, 0.6]}])");
  EXPECT_ANY_THROW(read_distributions(bad_weights));
  std::istringstream wrong_t(R"([{"t": 2, "points": [[0, 0]], "weights": [1]}])");
  EXPECT_THROW(read_distributions(wrong_t), ParseError);
}

TEST(DiscreteDistribution, Validation) {
  EXPECT_NO_THROW(DiscreteDistribution::dirac({1.0, 2.0}).validate());
  EXPECT_THROW((DiscreteDistribution{{}, {}}).validate(), ValidationError);
  EXPECT_THROW((DiscreteDistribution{{{0, 0}, {0, 0}}, {0.5, 0.5}}).validate(), ValidationError);
  EXPECT_THROW((DiscreteDistribution{{{0, 0}, {1, 0}}, {-0.5, 1.5}}).validate(), ValidationError);
}
