#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nesua/matrix.hpp"

namespace nesua {

/// One serving cell per UE.
struct HardAssociation {
  std::vector<int> assignment;  // length K, each entry in [0, n_cells)
  int n_cells = 0;

  std::size_t n_ues() const noexcept { return assignment.size(); }

  /// One-hot K x N view.
  MatrixD as_matrix() const;

  /// Throws ContractError when an entry is outside [0, n_cells).
  void validate() const;
};

/// Row-wise argmax with ties toward the lowest column index.
HardAssociation argmax_rows(const MatrixD& scores);

/// Converts a one-hot matrix back to an assignment; ContractError on any other row.
HardAssociation from_one_hot(const MatrixD& one_hot);

}  // namespace nesua
