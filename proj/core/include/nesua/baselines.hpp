#pragma once

#include <cstdint>

#include "nesua/association.hpp"
#include "nesua/power.hpp"
#include "nesua/scenario.hpp"

namespace nesua {

/// Max wideband RSRP; ties toward the lowest cell index.
HardAssociation associate_rsrp(const Scenario& s);

enum class SubSinrAggregate {
  max,       // best single PRB
  mean_top8  // mean (dB) of the eight best PRBs
};

/// Genie-aided sub-band SINR: the cell whose best per-PRB SINR is highest.
HardAssociation associate_ga_subsinr(const Scenario& s, SubSinrAggregate agg = SubSinrAggregate::max);

struct OracleResult {
  HardAssociation association;
  double power_w = 0.0;
  /// True when no candidate avoided overload and the returned one overloads a cell.
  bool overloaded = false;
  std::uint64_t candidates = 0;
};

inline constexpr std::uint64_t kDefaultOracleBudget = 10'000'000;

/// Number of candidates (n_cells ^ n_ues), saturating at UINT64_MAX.
std::uint64_t oracle_search_size(std::size_t n_ues, std::size_t n_cells);

/// Exhaustive minimum-power association over all n_cells^n_ues candidates.
///
/// Overload-free candidates win over overloaded ones; among equals the lowest power
/// wins and exact ties keep the lexicographically smallest assignment. Throws
/// BudgetExceeded when the search space exceeds `budget`.
OracleResult associate_oracle(const MatrixD& prb, int n_prb_total, const PowerParams& p,
                              std::uint64_t budget = kDefaultOracleBudget);
OracleResult associate_oracle(const Scenario& s, const PowerParams& p,
                              std::uint64_t budget = kDefaultOracleBudget);

}  // namespace nesua
