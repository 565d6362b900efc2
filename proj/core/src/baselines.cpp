#include "nesua/baselines.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "nesua/errors.hpp"

namespace nesua {

HardAssociation associate_rsrp(const Scenario& s) { return argmax_rows(s.rsrp_dbm); }

HardAssociation associate_ga_subsinr(const Scenario& s, SubSinrAggregate agg) {
  const std::size_t n_ues = s.n_ues();
  const std::size_t n_cells = s.n_cells();
  MatrixD score(n_ues, n_cells);
  std::vector<double> buf;
  for (std::size_t k = 0; k < n_ues; ++k) {
    for (std::size_t n = 0; n < n_cells; ++n) {
      const auto prbs = s.sinr_prbs(k, n);
      if (agg == SubSinrAggregate::max) {
        score(k, n) = *std::max_element(prbs.begin(), prbs.end());
      } else {
        buf.assign(prbs.begin(), prbs.end());
        const std::size_t top = std::min<std::size_t>(8, buf.size());
        std::partial_sort(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(top), buf.end(),
                          std::greater<>());
        double acc = 0.0;
        for (std::size_t i = 0; i < top; ++i) acc += buf[i];
        score(k, n) = acc / static_cast<double>(top);
      }
    }
  }
  return argmax_rows(score);
}

std::uint64_t oracle_search_size(std::size_t n_ues, std::size_t n_cells) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 1;
  for (std::size_t k = 0; k < n_ues; ++k) {
    if (n_cells != 0 && total > kMax / n_cells) return kMax;
    total *= n_cells;
  }
  return total;
}

OracleResult associate_oracle(const MatrixD& prb, int n_prb_total, const PowerParams& p, std::uint64_t budget) {
  const std::size_t n_ues = prb.rows();
  const std::size_t n_cells = prb.cols();
  if (n_cells == 0) throw ArgumentError("associate_oracle: no cells");
  const std::uint64_t size = oracle_search_size(n_ues, n_cells);
  if (size > budget) {
    throw BudgetExceeded("associate_oracle: " + std::to_string(n_cells) + "^" + std::to_string(n_ues) +
                         " candidates exceed the enumeration budget of " + std::to_string(budget));
  }

  // Odometer over assignments in lexicographic order (UE 0 most significant). Loads are
  // rebuilt per candidate in UE order so every power matches network_power_hard bit for bit.
  std::vector<int> cur(n_ues, 0);
  std::vector<double> load(n_cells);
  std::vector<int> count(n_cells);

  OracleResult best;
  best.association.n_cells = static_cast<int>(n_cells);
  bool have = false;
  for (std::uint64_t c = 0; c < size; ++c) {
    std::fill(load.begin(), load.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t k = 0; k < n_ues; ++k) {
      const auto n = static_cast<std::size_t>(cur[k]);
      load[n] += prb(k, n);
      count[n] += 1;
    }
    double power = 0.0;
    bool over = false;
    for (std::size_t n = 0; n < n_cells; ++n) {
      const auto u = utilization(load[n], n_prb_total);
      over = over || u.overload;
      power += bs_power(u.eta, count[n] > 0, p);
    }
    const bool better = !have || (best.overloaded && !over) || (best.overloaded == over && power < best.power_w);
    if (better) {
      have = true;
      best.power_w = power;
      best.overloaded = over;
      best.association.assignment = cur;
    }
    for (std::size_t k = n_ues; k-- > 0;) {
      cur[k] = (cur[k] + 1) % static_cast<int>(n_cells);
      if (cur[k] != 0) break;
    }
  }
  best.candidates = size;
  return best;
}

OracleResult associate_oracle(const Scenario& s, const PowerParams& p, std::uint64_t budget) {
  MatrixD prb(s.n_ues(), s.n_cells());
  for (std::size_t i = 0; i < prb.size(); ++i) prb.data()[i] = static_cast<double>(s.prb_demand.data()[i]);
  return associate_oracle(prb, s.n_prb_total, p, budget);
}

}  // namespace nesua
