#include "nesua/power.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nesua/errors.hpp"

namespace nesua {

namespace {

double radio_slope(const PowerParams& p) {
  const double eta_unit = p.eta_as_pout ? p.p_max_pa_w : 1.0;
  return p.n_tx * eta_unit / ((1.0 + p.epsilon) * p.sigma_max);
}

double radio_constant(const PowerParams& p) {
  return p.n_tx * p.epsilon * p.p_max_pa_w / ((1.0 + p.epsilon) * p.sigma_max);
}

}  // namespace

void PowerParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("PowerParams: " + what); };
  if (!(sigma_max > 0.0 && sigma_max <= 1.0)) fail("sigma_max must lie in (0, 1]");
  if (!(epsilon >= 0.0)) fail("epsilon must be >= 0");
  if (!(p_fixed_w >= 0.0 && p_bb0_w >= 0.0 && p_bb_slope_w >= 0.0 && p_max_pa_w >= 0.0 && p_sleep_w >= 0.0)) {
    fail("powers must be >= 0");
  }
  if (p_sleep_w > p_fixed_w) fail("p_sleep_w must not exceed p_fixed_w");
  if (n_tx < 1) fail("n_tx must be >= 1");
}

double radio_power(double eta, const PowerParams& p) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw ArgumentError("radio_power: utilization " + std::to_string(eta) + " outside [0, 1]");
  }
  const double eta_term = p.eta_as_pout ? eta * p.p_max_pa_w : eta;
  return p.n_tx * (eta_term + p.epsilon * p.p_max_pa_w) / ((1.0 + p.epsilon) * p.sigma_max);
}

Utilization utilization(double prb_used, int prb_total) {
  if (prb_total <= 0) throw ArgumentError("utilization: prb_total must be positive");
  if (!(prb_used >= 0.0)) throw ArgumentError("utilization: prb_used must be >= 0");
  const double ratio = prb_used / static_cast<double>(prb_total);
  return {std::min(1.0, ratio), prb_used > static_cast<double>(prb_total)};
}

double bs_power(double eta, bool active, const PowerParams& p) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw ArgumentError("bs_power: utilization " + std::to_string(eta) + " outside [0, 1]");
  }
  if (!active) return p.p_sleep_w;
  return p.p_fixed_w + (p.p_bb0_w + p.p_bb_slope_w * eta) + radio_power(eta, p);
}

bool NetworkPower::any_overload() const {
  return std::any_of(cells.begin(), cells.end(), [](const CellPower& c) { return c.overload; });
}

int NetworkPower::switched_off() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](const CellPower& c) { return !c.active; }));
}

NetworkPower network_power_hard(const HardAssociation& assoc, const MatrixD& prb, const PowerParams& p,
                                int n_prb_total) {
  assoc.validate();
  if (prb.rows() != assoc.n_ues() || prb.cols() != static_cast<std::size_t>(assoc.n_cells)) {
    throw ContractError("network_power_hard: association is " + std::to_string(assoc.n_ues()) + "x" +
                        std::to_string(assoc.n_cells) + " but PRB matrix is " + std::to_string(prb.rows()) +
                        "x" + std::to_string(prb.cols()));
  }
  NetworkPower out;
  out.cells.resize(static_cast<std::size_t>(assoc.n_cells));
  for (std::size_t k = 0; k < assoc.n_ues(); ++k) {
    const auto n = static_cast<std::size_t>(assoc.assignment[k]);
    out.cells[n].load_prb += prb(k, n);
    out.cells[n].n_ues += 1;
  }
  for (auto& c : out.cells) {
    const auto u = utilization(c.load_prb, n_prb_total);
    c.eta = u.eta;
    c.overload = u.overload;
    c.active = c.n_ues > 0;
    c.power_w = bs_power(c.eta, c.active, p);
    out.total_w += c.power_w;
  }
  return out;
}

NetworkPower network_power_hard(const MatrixD& one_hot, const MatrixD& prb, const PowerParams& p,
                                int n_prb_total) {
  return network_power_hard(from_one_hot(one_hot), prb, p, n_prb_total);
}

ad::Var soft_cell_load(ad::Var assoc, const MatrixD& prb) {
  auto P = assoc.tape()->constant(ad::Tensor::from_matrix(prb));
  return ad::column_sums(ad::multiply(assoc, P));
}

ad::Var network_power_soft(ad::Var assoc, const MatrixD& prb, const PowerParams& p, int n_prb_total) {
  if (n_prb_total <= 0) throw ArgumentError("network_power_soft: n_prb_total must be positive");
  const auto n_cells = static_cast<double>(prb.cols());
  auto gate = ad::complement_product_gate(assoc);
  auto load = soft_cell_load(assoc, prb);
  auto eta = ad::clamp(ad::scale(load, 1.0 / n_prb_total), 0.0, 1.0);
  // Active-cell power is affine in eta: a + b * eta.
  const double a = p.p_fixed_w - p.p_sleep_w + p.p_bb0_w + radio_constant(p);
  const double b = p.p_bb_slope_w + radio_slope(p);
  auto active_part = ad::multiply(gate, ad::add_scalar(ad::scale(eta, b), a));
  return ad::add_scalar(ad::sum(active_part), n_cells * p.p_sleep_w);
}

}  // namespace nesua
