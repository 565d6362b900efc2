#pragma once

#include <span>
#include <vector>

#include "nesua/association.hpp"
#include "nesua/autodiff.hpp"
#include "nesua/matrix.hpp"

namespace nesua {

/// Base-station power model parameters (Watts unless noted).
struct PowerParams {
  double p_fixed_w = 100.0;
  double p_bb0_w = 10.0;        // baseband at zero load
  double p_bb_slope_w = 20.0;   // baseband per unit utilization
  double epsilon = 0.5;         // PA design constant
  double sigma_max = 0.5;       // PA efficiency at maximum output
  double p_max_pa_w = 40.0;
  int n_tx = 4;
  double p_sleep_w = 0.0;       // switched-off cell
  /// Alternative reading of the radio term: scale utilization by p_max_pa_w.
  bool eta_as_pout = false;

  void validate() const;  // ConfigError
};

/// N_tx * (eta + epsilon * P_max,PA) / ((1 + epsilon) * sigma_max). ArgumentError outside [0, 1].
double radio_power(double eta, const PowerParams& p);

struct Utilization {
  double eta = 0.0;
  bool overload = false;
};

/// min(1, used / total); overload when used > total.
Utilization utilization(double prb_used, int prb_total);

/// Active: fixed + baseband(eta) + radio(eta). Inactive: sleep power.
double bs_power(double eta, bool active, const PowerParams& p);

struct CellPower {
  double load_prb = 0.0;
  double eta = 0.0;
  int n_ues = 0;
  bool active = false;
  bool overload = false;
  double power_w = 0.0;
};

struct NetworkPower {
  double total_w = 0.0;
  std::vector<CellPower> cells;

  bool any_overload() const;
  int switched_off() const;
};

/// Total network power for a hard association. A cell is active when it serves at
/// least one UE. ContractError on an out-of-range assignment.
NetworkPower network_power_hard(const HardAssociation& assoc, const MatrixD& prb, const PowerParams& p,
                                int n_prb_total);
/// Same, from a one-hot K x N matrix; ContractError when a row is not one-hot.
NetworkPower network_power_hard(const MatrixD& one_hot, const MatrixD& prb, const PowerParams& p,
                                int n_prb_total);

/// Soft per-cell PRB load: load_n = sum_k S(k, n) * P(k, n), shape (1 x N).
ad::Var soft_cell_load(ad::Var assoc, const MatrixD& prb);

/// Differentiable network power for a row-stochastic association.
///
/// Each cell is weighted by the soft activity gate g_n = 1 - prod_k (1 - S(k, n)),
/// which is exactly 0/1 at one-hot corners, so the result coincides with
/// network_power_hard there. Utilization is clamped to [0, 1].
ad::Var network_power_soft(ad::Var assoc, const MatrixD& prb, const PowerParams& p, int n_prb_total);

}  // namespace nesua
