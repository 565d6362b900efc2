#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nesua/matrix.hpp"

namespace nesua {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

/// Parameters of one family of network realizations.
///
/// Each cell carries the full configured bandwidth; the reuse factor only decides
/// which cells share a carrier and therefore interfere with each other.
struct ScenarioConfig {
  int n_cells = 7;
  double inter_site_distance_m = 1000.0;
  double region_width_m = 3000.0;
  double region_height_m = 3000.0;
  int n_ues = 50;
  double bandwidth_mhz = 20.0;
  double subcarrier_spacing_khz = 30.0;
  double carrier_ghz = 3.5;
  int n_tx_antennas = 4;
  double h_tx_m = 25.0;
  double h_ue_m = 1.5;
  double tx_power_dbm = 46.0;
  double noise_figure_db = 7.0;
  double pathloss_exponent = 3.5;
  double shadowing_sigma_db = 8.0;
  bool fast_fading = true;        // i.i.d. Rayleigh power gain per PRB
  double reuse_factor = 1.0 / 3.0;
  double gamma_th_db = 0.0;       // adjacency SINR threshold
  double ue_demand_mbps = 2.0;
  double se_cap_bps_per_hz = 7.4; // spectral-efficiency ceiling for PRB demand
  std::uint64_t rng_seed = 1;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  /// Number of co-channel groups, ceil(1 / reuse_factor).
  int reuse_groups() const;

  int n_prb_total() const;
  double prb_bandwidth_hz() const;
};

/// PRBs per carrier. Uses the NR transmission-bandwidth table when (bandwidth,
/// subcarrier spacing) is a tabulated pair, otherwise floor(W / (12 * scs)).
int prb_count(double bandwidth_mhz, double subcarrier_spacing_khz);

/// Cell sites on a hexagonal lattice, ring by ring, centered on the origin.
std::vector<Point2> hex_layout(int n_cells, double inter_site_distance_m);

/// Co-channel group of every cell in hex_layout order. With three groups this is the
/// classic proper 3-coloring of the hexagonal lattice.
std::vector<int> reuse_group_assignment(int n_cells, int n_groups);

/// One network realization. Matrices are K x N (UE rows, cell columns).
struct Scenario {
  std::uint64_t seed = 0;
  std::vector<Point2> bs_positions;
  std::vector<Point2> ue_positions;
  MatrixD distance_m;
  MatrixD sinr_db;       // wideband, linear mean over PRBs then dB
  std::vector<double> sinr_prb_db;  // K * N * n_prb_total, PRB index fastest
  MatrixD rsrp_dbm;
  MatrixI prb_demand;
  int n_prb_total = 0;
  double prb_bandwidth_hz = 0.0;

  std::size_t n_ues() const noexcept { return distance_m.rows(); }
  std::size_t n_cells() const noexcept { return distance_m.cols(); }

  double sinr_prb(std::size_t k, std::size_t n, std::size_t b) const noexcept {
    return sinr_prb_db[(k * n_cells() + n) * static_cast<std::size_t>(n_prb_total) + b];
  }
  std::span<const double> sinr_prbs(std::size_t k, std::size_t n) const noexcept {
    return {sinr_prb_db.data() + (k * n_cells() + n) * static_cast<std::size_t>(n_prb_total),
            static_cast<std::size_t>(n_prb_total)};
  }
};

/// Deterministic in (cfg, seed). Throws ConfigError when the region cannot hold the layout.
Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

/// p_kn = ceil(demand / per-PRB rate), with the rate taken from the wideband SINR and
/// capped at se_cap; clipped to [1, n_prb_total]. ArgumentError on nonpositive demand.
MatrixI compute_prb_demand(const Scenario& s, double demand_mbps, double se_cap_bps_per_hz = 7.4);

/// prb_demand as doubles, the form the power model consumes.
MatrixD prb_demand_matrix(const Scenario& s);

/// Homogeneous UE graph for one scenario.
struct GraphInstance {
  MatrixD features;       // K x 3N, rows [p_k | q_k | r_k]
  MaskMatrix adjacency;   // K x K, symmetric, unit diagonal
  MatrixD prb;            // K x N PRB demand
  int n_prb_total = 0;
  std::uint64_t scenario_seed = 0;

  std::size_t n_ues() const noexcept { return prb.rows(); }
  std::size_t n_cells() const noexcept { return prb.cols(); }
};

/// UEs i and j are connected when some cell is heard above gamma_th by both of them.
MaskMatrix build_adjacency(const MatrixD& sinr_db, double gamma_th_db);

/// Raw (un-normalized) features plus adjacency; see NormStats for scaling.
GraphInstance build_graph(const Scenario& s, double gamma_th_db);

/// Per-column z-score statistics, pooled over all UE rows of a set of graphs.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> scale;  // standard deviation, 1 for constant columns

  static NormStats fit(std::span<const GraphInstance> graphs);
  void apply(GraphInstance& g) const;
  bool empty() const noexcept { return mean.empty(); }
};

}  // namespace nesua
