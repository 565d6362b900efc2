#include "nesua/association.hpp"

#include <string>

namespace nesua {

MatrixD HardAssociation::as_matrix() const {
  validate();
  MatrixD m(assignment.size(), static_cast<std::size_t>(n_cells), 0.0);
  for (std::size_t k = 0; k < assignment.size(); ++k) m(k, static_cast<std::size_t>(assignment[k])) = 1.0;
  return m;
}

void HardAssociation::validate() const {
  for (std::size_t k = 0; k < assignment.size(); ++k) {
    if (assignment[k] < 0 || assignment[k] >= n_cells) {
      throw ContractError("HardAssociation: UE " + std::to_string(k) + " assigned to cell " +
                          std::to_string(assignment[k]) + " outside [0, " + std::to_string(n_cells) + ")");
    }
  }
}

HardAssociation argmax_rows(const MatrixD& scores) {
  HardAssociation h;
  h.n_cells = static_cast<int>(scores.cols());
  h.assignment.resize(scores.rows(), 0);
  for (std::size_t k = 0; k < scores.rows(); ++k) {
    std::size_t best = 0;
    for (std::size_t n = 1; n < scores.cols(); ++n) {
      if (scores(k, n) > scores(k, best)) best = n;
    }
    h.assignment[k] = static_cast<int>(best);
  }
  return h;
}

HardAssociation from_one_hot(const MatrixD& one_hot) {
  HardAssociation h;
  h.n_cells = static_cast<int>(one_hot.cols());
  h.assignment.resize(one_hot.rows(), -1);
  for (std::size_t k = 0; k < one_hot.rows(); ++k) {
    int ones = 0;
    for (std::size_t n = 0; n < one_hot.cols(); ++n) {
      const double v = one_hot(k, n);
      if (v == 1.0) {
        ++ones;
        h.assignment[k] = static_cast<int>(n);
      } else if (v != 0.0) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) throw ContractError("association row " + std::to_string(k) + " is not one-hot");
  }
  return h;
}

}  // namespace nesua
