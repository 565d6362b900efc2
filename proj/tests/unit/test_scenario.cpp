#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <random>

#include "nesua/errors.hpp"
#include "nesua/scenario.hpp"
#include "oracles.hpp"

namespace nesua {
namespace {

ScenarioConfig small_config(int k, int n) {
  ScenarioConfig c;
  c.n_ues = k;
  c.n_cells = n;
  return c;
}

Scenario scenario_from_sinr(const MatrixD& sinr_db, int n_prb_total = 51) {
  Scenario s;
  s.sinr_db = sinr_db;
  s.distance_m = MatrixD(sinr_db.rows(), sinr_db.cols(), 100.0);
  s.n_prb_total = n_prb_total;
  s.prb_bandwidth_hz = 360e3;
  return s;
}

TEST(PrbCount, TabulatedAndFallback) {
  EXPECT_EQ(prb_count(20.0, 30.0), 51);
  EXPECT_EQ(prb_count(40.0, 30.0), 106);
  EXPECT_EQ(prb_count(80.0, 30.0), 217);
  EXPECT_EQ(prb_count(20.0, 15.0), 106);
  // Not in the table: floor(W / (12 scs)).
  EXPECT_EQ(prb_count(7.2, 30.0), 20);
  EXPECT_THROW(prb_count(0.0, 30.0), ConfigError);
  EXPECT_THROW(prb_count(0.1, 30.0), ConfigError);
}

TEST(HexLayout, RingDistances) {
  const auto pts = hex_layout(7, 1000.0);
  ASSERT_EQ(pts.size(), 7u);
  EXPECT_DOUBLE_EQ(pts[0].x, 0.0);
  EXPECT_DOUBLE_EQ(pts[0].y, 0.0);
  for (std::size_t i = 1; i < 7; ++i) {
    EXPECT_NEAR(std::hypot(pts[i].x, pts[i].y), 1000.0, 1e-9);
    const auto& next = pts[i == 6 ? 1 : i + 1];
    EXPECT_NEAR(std::hypot(pts[i].x - next.x, pts[i].y - next.y), 1000.0, 1e-9) << i;
  }
  EXPECT_EQ(hex_layout(19, 500.0).size(), 19u);
}

TEST(ReuseGroups, NeighborsNeverShareAGroupUnderReuseThree) {
  const auto pts = hex_layout(19, 1.0);
  const auto groups = reuse_group_assignment(19, 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_GE(groups[i], 0);
    EXPECT_LT(groups[i], 3);
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (std::abs(std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) - 1.0) < 1e-9) {
        EXPECT_NE(groups[i], groups[j]) << i << "," << j;
      }
    }
  }
  for (int g : reuse_group_assignment(7, 1)) EXPECT_EQ(g, 0);
  const auto seven = reuse_group_assignment(7, 7);
  EXPECT_EQ(std::set<int>(seven.begin(), seven.end()).size(), 7u);
}

TEST(ScenarioConfig, ReuseGroupCount) {
  ScenarioConfig c;
  EXPECT_EQ(c.reuse_groups(), 3);
  c.reuse_factor = 1.0;
  EXPECT_EQ(c.reuse_groups(), 1);
  c.reuse_factor = 1.0 / 7.0;
  EXPECT_EQ(c.reuse_groups(), 7);
}

TEST(ScenarioConfig, ValidateRejectsBadValues) {
  auto expect_bad = [](auto mutate) {
    ScenarioConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  expect_bad([](ScenarioConfig& c) { c.n_cells = 0; });
  expect_bad([](ScenarioConfig& c) { c.n_ues = 0; });
  expect_bad([](ScenarioConfig& c) { c.bandwidth_mhz = 0; });
  expect_bad([](ScenarioConfig& c) { c.reuse_factor = 0; });
  expect_bad([](ScenarioConfig& c) { c.reuse_factor = 1.5; });
  expect_bad([](ScenarioConfig& c) { c.ue_demand_mbps = -1; });
}

TEST(GenerateScenario, PaperScaleShapes) {
  const auto s = generate_scenario(ScenarioConfig{}, 42);
  EXPECT_EQ(s.n_ues(), 50u);
  EXPECT_EQ(s.n_cells(), 7u);
  EXPECT_EQ(s.n_prb_total, 51);
  EXPECT_EQ(s.bs_positions.size(), 7u);
  EXPECT_EQ(s.ue_positions.size(), 50u);
  EXPECT_EQ(s.sinr_prb_db.size(), 50u * 7u * 51u);
  EXPECT_DOUBLE_EQ(s.prb_bandwidth_hz, 360e3);
  // Sites centered in the region.
  EXPECT_DOUBLE_EQ(s.bs_positions[0].x, 1500.0);
  EXPECT_DOUBLE_EQ(s.bs_positions[0].y, 1500.0);
}

TEST(GenerateScenario, Deterministic) {
  const auto a = generate_scenario(ScenarioConfig{}, 9);
  const auto b = generate_scenario(ScenarioConfig{}, 9);
  EXPECT_EQ(a.ue_positions, b.ue_positions);
  EXPECT_EQ(a.sinr_db, b.sinr_db);
  EXPECT_EQ(a.sinr_prb_db, b.sinr_prb_db);
  EXPECT_EQ(a.rsrp_dbm, b.rsrp_dbm);
  EXPECT_EQ(a.prb_demand, b.prb_demand);
  const auto c = generate_scenario(ScenarioConfig{}, 10);
  EXPECT_NE(a.sinr_db, c.sinr_db);
}

TEST(GenerateScenario, SingleCellSinrIsSnr) {
  auto cfg = small_config(1, 1);
  cfg.fast_fading = false;
  cfg.shadowing_sigma_db = 0.0;
  const auto s = generate_scenario(cfg, 3);
  ASSERT_EQ(s.sinr_db.rows(), 1u);
  ASSERT_EQ(s.sinr_db.cols(), 1u);
  const double pl0 = 20.0 * std::log10(4.0 * std::numbers::pi * 3.5e9 / 299792458.0);
  const double loss = pl0 + 35.0 * std::log10(s.distance_m(0, 0));
  const double rx = 46.0 - 10.0 * std::log10(51.0) + 10.0 * std::log10(4.0) - loss;
  const double noise = -174.0 + 10.0 * std::log10(360e3) + 7.0;
  EXPECT_NEAR(s.sinr_db(0, 0), rx - noise, 1e-9);
}

TEST(GenerateScenario, RegionTooSmallIsConfigError) {
  ScenarioConfig c;
  c.region_width_m = 1500.0;
  EXPECT_THROW(generate_scenario(c, 1), ConfigError);
}

TEST(GenerateScenario, Invariants) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    ScenarioConfig cfg;
    cfg.n_ues = 20;
    const auto s = generate_scenario(cfg, seed);
    const auto T = static_cast<std::size_t>(s.n_prb_total);
    for (std::size_t k = 0; k < s.n_ues(); ++k) {
      for (std::size_t n = 0; n < s.n_cells(); ++n) {
        EXPECT_GT(s.distance_m(k, n), 0.0);
        EXPECT_GE(s.prb_demand(k, n), 1);
        EXPECT_LE(s.prb_demand(k, n), s.n_prb_total);
        double mean_lin = 0.0;
        for (std::size_t b = 0; b < T; ++b) {
          ASSERT_TRUE(std::isfinite(s.sinr_prb(k, n, b)));
          mean_lin += std::pow(10.0, s.sinr_prb(k, n, b) / 10.0);
        }
        mean_lin /= static_cast<double>(T);
        const double wb = std::pow(10.0, s.sinr_db(k, n) / 10.0);
        EXPECT_NEAR(wb, mean_lin, 1e-9 * mean_lin);
      }
    }
  }
}

TEST(GenerateScenario, SignalOnlyPartIsMonotoneInDistance) {
  // With a single reuse group of one cell there is no interference: SINR = SNR, which
  // must be non-increasing in distance.
  ScenarioConfig cfg;
  cfg.n_cells = 1;
  cfg.n_ues = 300;
  cfg.fast_fading = false;
  cfg.shadowing_sigma_db = 0.0;
  const auto s = generate_scenario(cfg, 11);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < s.n_ues(); ++k) pts.emplace_back(s.distance_m(k, 0), s.sinr_db(k, 0));
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_LE(pts[i].second, pts[i - 1].second + 1e-12);
}

TEST(PrbDemand, ExactlyOnePrb) {
  MatrixD sinr(1, 1, 10.0 * std::log10(15.0));  // log2(1 + 15) = 4
  const auto s = scenario_from_sinr(sinr);
  const auto p = compute_prb_demand(s, 4.0 * 360e3 / 1e6);
  EXPECT_EQ(p(0, 0), 1);
}

TEST(PrbDemand, CapBindsAtVanishingRate) {
  MatrixD sinr(1, 2, -400.0);
  sinr(0, 1) = -30.0;
  const auto s = scenario_from_sinr(sinr);
  const auto p = compute_prb_demand(s, 2.0);
  EXPECT_EQ(p(0, 0), 51);
  EXPECT_EQ(p(0, 1), 51);
}

TEST(PrbDemand, HandArithmetic) {
  MatrixD sinr(1, 1, 10.0 * std::log10(3.0));  // SE = 2 bit/s/Hz
  const auto s = scenario_from_sinr(sinr);
  EXPECT_EQ(compute_prb_demand(s, 5.0)(0, 0), 7);  // ceil(5e6 / 720e3)
}

TEST(PrbDemand, SpectralEfficiencyCap) {
  MatrixD sinr(1, 1, 60.0);  // log2(1 + 1e6) ~ 19.9, capped at 7.4
  const auto s = scenario_from_sinr(sinr);
  EXPECT_EQ(compute_prb_demand(s, 10.0)(0, 0), static_cast<int>(std::ceil(10e6 / (360e3 * 7.4))));
}

TEST(PrbDemand, RejectsNonPositiveDemand) {
  const auto s = scenario_from_sinr(MatrixD(1, 1, 0.0));
  EXPECT_THROW(compute_prb_demand(s, 0.0), ArgumentError);
  EXPECT_THROW(compute_prb_demand(s, -2.0), ArgumentError);
}

TEST(Adjacency, SpecExamples) {
  auto a = build_adjacency(MatrixD::from_rows({{10.0}, {12.0}}), 5.0);
  EXPECT_EQ(a, MaskMatrix::from_rows({{1, 1}, {1, 1}}));
  a = build_adjacency(MatrixD::from_rows({{10.0}, {3.0}}), 5.0);
  EXPECT_EQ(a, MaskMatrix::from_rows({{1, 0}, {0, 1}}));
  // UE0, UE1 pass cell 0; UE1, UE2 pass cell 1.
  a = build_adjacency(MatrixD::from_rows({{9.0, 0.0}, {9.0, 9.0}, {0.0, 9.0}}), 5.0);
  EXPECT_EQ(a, MaskMatrix::from_rows({{1, 1, 0}, {1, 1, 1}, {0, 1, 1}}));
}

TEST(Adjacency, ThresholdIsStrict) {
  const auto a = build_adjacency(MatrixD::from_rows({{5.0}, {5.0}}), 5.0);
  EXPECT_EQ(a, MaskMatrix::from_rows({{1, 0}, {0, 1}}));
}

TEST(Adjacency, MatchesTripleLoopAndIsSymmetricReflexive) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng() % 30;
    const auto sinr = testing::random_matrix(k, 7, rng, -20.0, 20.0);
    const auto a = build_adjacency(sinr, 0.0);
    ASSERT_EQ(a, testing::brute_adjacency(sinr, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_EQ(a(i, i), 1);
      for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(a(i, j), a(j, i));
    }
  }
}

TEST(Adjacency, RaisingThresholdNeverAddsEdges) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const auto sinr = testing::random_matrix(15, 7, rng, -20.0, 20.0);
    const auto lo = build_adjacency(sinr, -3.0);
    const auto hi = build_adjacency(sinr, 4.0);
    for (std::size_t i = 0; i < 15; ++i) {
      for (std::size_t j = 0; j < 15; ++j) {
        if (i != j && hi(i, j)) EXPECT_EQ(lo(i, j), 1);
      }
    }
  }
}

TEST(BuildGraph, FeatureLayout) {
  ScenarioConfig cfg;
  cfg.n_ues = 12;
  const auto s = generate_scenario(cfg, 4);
  const auto g = build_graph(s, 0.0);
  ASSERT_EQ(g.features.rows(), 12u);
  ASSERT_EQ(g.features.cols(), 21u);  // d = 3N
  EXPECT_EQ(g.n_prb_total, 51);
  EXPECT_EQ(g.scenario_seed, 4u);
  for (std::size_t k = 0; k < 12; ++k) {
    for (std::size_t n = 0; n < 7; ++n) {
      EXPECT_EQ(g.features(k, n), s.prb_demand(k, n));
      EXPECT_EQ(g.features(k, 7 + n), s.distance_m(k, n));
      EXPECT_EQ(g.features(k, 14 + n), s.sinr_db(k, n));
      EXPECT_EQ(g.prb(k, n), s.prb_demand(k, n));
    }
  }
  EXPECT_EQ(g.adjacency, testing::brute_adjacency(s.sinr_db, 0.0));
}

TEST(NormStats, ZeroMeanUnitVarianceOnFittedSet) {
  std::vector<GraphInstance> graphs;
  ScenarioConfig cfg;
  cfg.n_ues = 15;
  for (std::uint64_t seed = 0; seed < 8; ++seed) graphs.push_back(build_graph(generate_scenario(cfg, seed), 0.0));
  const auto st = NormStats::fit(graphs);
  for (auto& g : graphs) st.apply(g);
  const std::size_t d = graphs.front().features.cols();
  for (std::size_t c = 0; c < d; ++c) {
    double sum = 0.0, sq = 0.0;
    std::size_t rows = 0;
    for (const auto& g : graphs) {
      for (std::size_t k = 0; k < g.features.rows(); ++k) {
        ASSERT_TRUE(std::isfinite(g.features(k, c)));
        sum += g.features(k, c);
        sq += g.features(k, c) * g.features(k, c);
        ++rows;
      }
    }
    const double mean = sum / static_cast<double>(rows);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    const double var = sq / static_cast<double>(rows) - mean * mean;
    // A column can be constant (e.g. PRB demand pinned at the cap); it keeps scale 1.
    if (st.scale[c] != 1.0) EXPECT_NEAR(var, 1.0, 1e-6);
  }
}

TEST(NormStats, ConstantColumnKeepsUnitScale) {
  GraphInstance g;
  g.features = MatrixD::from_rows({{1.0, 2.0, 3.0}, {1.0, 4.0, 5.0}});
  const std::vector<GraphInstance> one{g};
  const auto st = NormStats::fit(one);
  EXPECT_EQ(st.scale[0], 1.0);
  st.apply(g);
  EXPECT_EQ(g.features(0, 0), 0.0);
  EXPECT_NEAR(g.features(0, 1), -1.0, 1e-12);
}

}  // namespace
}  // namespace nesua
