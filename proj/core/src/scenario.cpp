#include "nesua/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "nesua/errors.hpp"

namespace nesua {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kThermalNoiseDbmPerHz = -174.0;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

struct Axial {
  int q;
  int r;
};

std::vector<Axial> hex_axial(int n_cells) {
  static constexpr std::array<Axial, 6> kWalk{{{-1, 1}, {-1, 0}, {0, -1}, {1, -1}, {1, 0}, {0, 1}}};
  std::vector<Axial> cells;
  cells.reserve(static_cast<std::size_t>(std::max(n_cells, 0)));
  if (n_cells <= 0) return cells;
  cells.push_back({0, 0});
  for (int ring = 1; static_cast<int>(cells.size()) < n_cells; ++ring) {
    Axial h{ring, 0};
    for (const auto& step : kWalk) {
      for (int i = 0; i < ring; ++i) {
        cells.push_back(h);
        h.q += step.q;
        h.r += step.r;
        if (static_cast<int>(cells.size()) == n_cells) return cells;
      }
    }
  }
  return cells;
}

int positive_mod(int a, int m) { return ((a % m) + m) % m; }

// NR maximum transmission bandwidth configuration, FR1.
struct PrbTableEntry {
  double scs_khz;
  double bw_mhz;
  int n_rb;
};
constexpr std::array<PrbTableEntry, 33> kPrbTable{{
    {15, 5, 25},   {15, 10, 52},   {15, 15, 79},   {15, 20, 106},  {15, 25, 133},
    {15, 30, 160}, {15, 40, 216},  {15, 50, 270},  {30, 5, 11},    {30, 10, 24},
    {30, 15, 38},  {30, 20, 51},   {30, 25, 65},   {30, 30, 78},   {30, 40, 106},
    {30, 50, 133}, {30, 60, 162},  {30, 70, 189},  {30, 80, 217},  {30, 90, 245},
    {30, 100, 273}, {60, 10, 11},  {60, 15, 18},   {60, 20, 24},   {60, 25, 31},
    {60, 30, 38},  {60, 40, 51},   {60, 50, 65},   {60, 60, 79},   {60, 70, 93},
    {60, 80, 107}, {60, 90, 121},  {60, 100, 135},
}};

}  // namespace

int prb_count(double bandwidth_mhz, double subcarrier_spacing_khz) {
  if (!(bandwidth_mhz > 0.0) || !(subcarrier_spacing_khz > 0.0)) {
    throw ConfigError("prb_count: bandwidth and subcarrier spacing must be positive");
  }
  for (const auto& e : kPrbTable) {
    if (e.scs_khz == subcarrier_spacing_khz && e.bw_mhz == bandwidth_mhz) return e.n_rb;
  }
  const int n = static_cast<int>(std::floor(bandwidth_mhz * 1e3 / (12.0 * subcarrier_spacing_khz)));
  if (n < 1) throw ConfigError("prb_count: bandwidth holds no PRB at this subcarrier spacing");
  return n;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("ScenarioConfig: " + what); };
  if (n_cells < 1) fail("n_cells must be >= 1");
  if (n_ues < 1) fail("n_ues must be >= 1");
  if (!(bandwidth_mhz > 0.0)) fail("bandwidth_mhz must be > 0");
  if (!(subcarrier_spacing_khz > 0.0)) fail("subcarrier_spacing_khz must be > 0");
  if (!(inter_site_distance_m > 0.0)) fail("inter_site_distance_m must be > 0");
  if (!(region_width_m > 0.0) || !(region_height_m > 0.0)) fail("region must have positive extent");
  if (!(carrier_ghz > 0.0)) fail("carrier_ghz must be > 0");
  if (n_tx_antennas < 1) fail("n_tx_antennas must be >= 1");
  if (!(h_tx_m >= 0.0) || !(h_ue_m >= 0.0)) fail("antenna heights must be >= 0");
  if (!(pathloss_exponent > 0.0)) fail("pathloss_exponent must be > 0");
  if (!(shadowing_sigma_db >= 0.0)) fail("shadowing_sigma_db must be >= 0");
  if (!(reuse_factor > 0.0 && reuse_factor <= 1.0)) fail("reuse_factor must lie in (0, 1]");
  if (!(ue_demand_mbps > 0.0)) fail("ue_demand_mbps must be > 0");
  if (!(se_cap_bps_per_hz > 0.0)) fail("se_cap_bps_per_hz must be > 0");
  if (!std::isfinite(tx_power_dbm) || !std::isfinite(noise_figure_db) || !std::isfinite(gamma_th_db)) {
    fail("tx_power_dbm, noise_figure_db and gamma_th_db must be finite");
  }
  (void)n_prb_total();
}

int ScenarioConfig::reuse_groups() const {
  return static_cast<int>(std::ceil(1.0 / reuse_factor - 1e-9));
}

int ScenarioConfig::n_prb_total() const { return prb_count(bandwidth_mhz, subcarrier_spacing_khz); }

double ScenarioConfig::prb_bandwidth_hz() const { return 12.0 * subcarrier_spacing_khz * 1e3; }

std::vector<Point2> hex_layout(int n_cells, double inter_site_distance_m) {
  std::vector<Point2> out;
  for (const auto& h : hex_axial(n_cells)) {
    out.push_back({inter_site_distance_m * (h.q + 0.5 * h.r),
                   inter_site_distance_m * (std::numbers::sqrt3 / 2.0) * h.r});
  }
  return out;
}

std::vector<int> reuse_group_assignment(int n_cells, int n_groups) {
  if (n_groups < 1) throw ConfigError("reuse_group_assignment: need at least one group");
  std::vector<int> groups;
  const auto cells = hex_axial(n_cells);
  groups.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& h = cells[i];
    int g = 0;
    if (n_groups == 1) {
      g = 0;
    } else if (n_groups == 3) {
      g = positive_mod(h.q - h.r, 3);
    } else if (n_groups == 7) {
      g = positive_mod(h.q + 3 * h.r, 7);
    } else {
      g = static_cast<int>(i) % n_groups;
    }
    groups.push_back(g);
  }
  return groups;
}

Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto n_cells = static_cast<std::size_t>(cfg.n_cells);
  const auto n_ues = static_cast<std::size_t>(cfg.n_ues);
  const int n_prb = cfg.n_prb_total();
  const auto n_prb_sz = static_cast<std::size_t>(n_prb);

  Scenario s;
  s.seed = seed;
  s.n_prb_total = n_prb;
  s.prb_bandwidth_hz = cfg.prb_bandwidth_hz();

  const double cx = cfg.region_width_m / 2.0;
  const double cy = cfg.region_height_m / 2.0;
  for (const auto& p : hex_layout(cfg.n_cells, cfg.inter_site_distance_m)) {
    Point2 bs{cx + p.x, cy + p.y};
    if (bs.x < 0.0 || bs.x > cfg.region_width_m || bs.y < 0.0 || bs.y > cfg.region_height_m) {
      throw ConfigError("generate_scenario: region " + std::to_string(cfg.region_width_m) + "x" +
                        std::to_string(cfg.region_height_m) + " m cannot contain " +
                        std::to_string(cfg.n_cells) + " hexagonal sites at ISD " +
                        std::to_string(cfg.inter_site_distance_m) + " m");
    }
    s.bs_positions.push_back(bs);
  }
  const auto groups = reuse_group_assignment(cfg.n_cells, cfg.reuse_groups());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, cfg.region_width_m);
  std::uniform_real_distribution<double> uy(0.0, cfg.region_height_m);
  s.ue_positions.reserve(n_ues);
  for (std::size_t k = 0; k < n_ues; ++k) {
    const double x = ux(rng);
    const double y = uy(rng);
    s.ue_positions.push_back({x, y});
  }

  const double dh = cfg.h_tx_m - cfg.h_ue_m;
  s.distance_m = MatrixD(n_ues, n_cells);
  for (std::size_t k = 0; k < n_ues; ++k) {
    for (std::size_t n = 0; n < n_cells; ++n) {
      const double dx = s.ue_positions[k].x - s.bs_positions[n].x;
      const double dy = s.ue_positions[k].y - s.bs_positions[n].y;
      // Floor at 1 m keeps the log-distance model inside its reference distance.
      s.distance_m(k, n) = std::max(std::sqrt(dx * dx + dy * dy + dh * dh), 1.0);
    }
  }

  // Log-distance path loss anchored at free space for d0 = 1 m.
  const double pl0_db = 20.0 * std::log10(4.0 * std::numbers::pi * cfg.carrier_ghz * 1e9 / kSpeedOfLight);
  MatrixD loss_db(n_ues, n_cells);
  std::normal_distribution<double> shadow(0.0, 1.0);
  for (std::size_t k = 0; k < n_ues; ++k) {
    for (std::size_t n = 0; n < n_cells; ++n) {
      const double z = shadow(rng);
      loss_db(k, n) = pl0_db + 10.0 * cfg.pathloss_exponent * std::log10(s.distance_m(k, n)) +
                      cfg.shadowing_sigma_db * z;
    }
  }

  const double noise_mw =
      db_to_linear(kThermalNoiseDbmPerHz + linear_to_db(s.prb_bandwidth_hz) + cfg.noise_figure_db);
  const double tx_prb_dbm = cfg.tx_power_dbm - linear_to_db(static_cast<double>(n_prb));
  const double array_gain_db = linear_to_db(static_cast<double>(cfg.n_tx_antennas));
  const double rs_offset_db = linear_to_db(12.0 * n_prb);

  MatrixD mean_gain_mw(n_ues, n_cells);
  s.rsrp_dbm = MatrixD(n_ues, n_cells);
  for (std::size_t k = 0; k < n_ues; ++k) {
    for (std::size_t n = 0; n < n_cells; ++n) {
      mean_gain_mw(k, n) = db_to_linear(tx_prb_dbm + array_gain_db - loss_db(k, n));
      s.rsrp_dbm(k, n) = cfg.tx_power_dbm - rs_offset_db - loss_db(k, n);
    }
  }

  // Small-scale power gain per (UE, cell, PRB); shared between the serving and the
  // interfering role of a link.
  std::vector<double> fading(n_ues * n_cells * n_prb_sz, 1.0);
  if (cfg.fast_fading) {
    std::exponential_distribution<double> rayleigh_power(1.0);
    for (auto& h : fading) h = std::max(rayleigh_power(rng), 1e-12);
  }
  auto fade = [&](std::size_t k, std::size_t n, std::size_t b) {
    return fading[(k * n_cells + n) * n_prb_sz + b];
  };

  s.sinr_prb_db.assign(n_ues * n_cells * n_prb_sz, 0.0);
  s.sinr_db = MatrixD(n_ues, n_cells);
  for (std::size_t k = 0; k < n_ues; ++k) {
    for (std::size_t n = 0; n < n_cells; ++n) {
      double sum_lin = 0.0;
      for (std::size_t b = 0; b < n_prb_sz; ++b) {
        double interference = 0.0;
        for (std::size_t m = 0; m < n_cells; ++m) {
          if (m != n && groups[m] == groups[n]) interference += mean_gain_mw(k, m) * fade(k, m, b);
        }
        const double sinr = mean_gain_mw(k, n) * fade(k, n, b) / (noise_mw + interference);
        sum_lin += sinr;
        s.sinr_prb_db[(k * n_cells + n) * n_prb_sz + b] = linear_to_db(sinr);
      }
      s.sinr_db(k, n) = linear_to_db(sum_lin / static_cast<double>(n_prb_sz));
    }
  }

  s.prb_demand = compute_prb_demand(s, cfg.ue_demand_mbps, cfg.se_cap_bps_per_hz);
  return s;
}

MatrixI compute_prb_demand(const Scenario& s, double demand_mbps, double se_cap_bps_per_hz) {
  if (!(demand_mbps > 0.0)) throw ArgumentError("compute_prb_demand: demand must be positive");
  if (!(se_cap_bps_per_hz > 0.0)) throw ArgumentError("compute_prb_demand: SE cap must be positive");
  if (s.n_prb_total < 1) throw ArgumentError("compute_prb_demand: scenario has no PRBs");
  const double demand_bps = demand_mbps * 1e6;
  const int cap = s.n_prb_total;
  MatrixI out(s.sinr_db.rows(), s.sinr_db.cols(), cap);
  for (std::size_t k = 0; k < out.rows(); ++k) {
    for (std::size_t n = 0; n < out.cols(); ++n) {
      const double se = std::min(std::log2(1.0 + db_to_linear(s.sinr_db(k, n))), se_cap_bps_per_hz);
      const double rate = s.prb_bandwidth_hz * se;
      if (!(rate > 0.0)) continue;
      // Relative slack absorbs the dB round trip when demand is an exact PRB multiple.
      const double need = demand_bps / rate;
      if (!(need < static_cast<double>(cap))) continue;
      const int p = static_cast<int>(std::ceil(need * (1.0 - 1e-12)));
      out(k, n) = std::clamp(p, 1, cap);
    }
  }
  return out;
}

MaskMatrix build_adjacency(const MatrixD& sinr_db, double gamma_th_db) {
  const std::size_t n_ues = sinr_db.rows();
  const std::size_t n_cells = sinr_db.cols();
  MaskMatrix a(n_ues, n_ues, 0);
  std::vector<std::size_t> members;
  for (std::size_t n = 0; n < n_cells; ++n) {
    members.clear();
    for (std::size_t k = 0; k < n_ues; ++k) {
      if (sinr_db(k, n) > gamma_th_db) members.push_back(k);
    }
    for (const auto i : members) {
      for (const auto j : members) a(i, j) = 1;
    }
  }
  for (std::size_t k = 0; k < n_ues; ++k) a(k, k) = 1;
  return a;
}

MatrixD prb_demand_matrix(const Scenario& s) {
  MatrixD out(s.prb_demand.rows(), s.prb_demand.cols());
  for (std::size_t k = 0; k < out.rows(); ++k) {
    for (std::size_t n = 0; n < out.cols(); ++n) out(k, n) = static_cast<double>(s.prb_demand(k, n));
  }
  return out;
}

GraphInstance build_graph(const Scenario& s, double gamma_th_db) {
  const std::size_t n_ues = s.n_ues();
  const std::size_t n_cells = s.n_cells();
  GraphInstance g;
  g.n_prb_total = s.n_prb_total;
  g.scenario_seed = s.seed;
  g.adjacency = build_adjacency(s.sinr_db, gamma_th_db);
  g.prb = MatrixD(n_ues, n_cells);
  g.features = MatrixD(n_ues, 3 * n_cells);
  for (std::size_t k = 0; k < n_ues; ++k) {
    for (std::size_t n = 0; n < n_cells; ++n) {
      const double p = static_cast<double>(s.prb_demand(k, n));
      g.prb(k, n) = p;
      g.features(k, n) = p;
      g.features(k, n_cells + n) = s.distance_m(k, n);
      g.features(k, 2 * n_cells + n) = s.sinr_db(k, n);
    }
  }
  return g;
}

NormStats NormStats::fit(std::span<const GraphInstance> graphs) {
  NormStats st;
  if (graphs.empty()) return st;
  const std::size_t d = graphs.front().features.cols();
  std::vector<double> sum(d, 0.0);
  std::size_t rows = 0;
  for (const auto& g : graphs) {
    if (g.features.cols() != d) throw ContractError("NormStats::fit: feature widths differ across graphs");
    for (std::size_t k = 0; k < g.features.rows(); ++k) {
      for (std::size_t c = 0; c < d; ++c) sum[c] += g.features(k, c);
    }
    rows += g.features.rows();
  }
  st.mean.resize(d);
  for (std::size_t c = 0; c < d; ++c) st.mean[c] = sum[c] / static_cast<double>(rows);
  std::vector<double> sq(d, 0.0);
  for (const auto& g : graphs) {
    for (std::size_t k = 0; k < g.features.rows(); ++k) {
      for (std::size_t c = 0; c < d; ++c) {
        const double e = g.features(k, c) - st.mean[c];
        sq[c] += e * e;
      }
    }
  }
  st.scale.resize(d);
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(sq[c] / static_cast<double>(rows));
    st.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return st;
}

void NormStats::apply(GraphInstance& g) const {
  if (g.features.cols() != mean.size()) {
    throw ContractError("NormStats::apply: graph has " + std::to_string(g.features.cols()) +
                        " feature columns, statistics have " + std::to_string(mean.size()));
  }
  for (std::size_t k = 0; k < g.features.rows(); ++k) {
    for (std::size_t c = 0; c < mean.size(); ++c) {
      g.features(k, c) = (g.features(k, c) - mean[c]) / scale[c];
    }
  }
}

}  // namespace nesua
