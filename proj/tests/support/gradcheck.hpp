#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nesua/autodiff.hpp"

namespace nesua::testing {

/// Builds a scalar on `tape` from leaves bound to the given inputs.
using ScalarFn = std::function<ad::Var(ad::Tape& tape, const std::vector<ad::Var>& inputs)>;

struct GradCheckOptions {
  double rel_tol = 1e-4;
  double abs_tol = 1e-6;
  /// Coordinates checked per input; 0 checks all of them.
  std::size_t max_coords_per_input = 0;
  std::uint64_t coord_seed = 0;
};

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose +/- probes straddle a kink
  std::size_t failed = 0;
  double worst_abs = 0.0;
  std::string first_failure;

  bool ok() const { return failed == 0; }
};

/// Central differences with h = 1e-5 max(1, |x|) against Tape::backward. A coordinate
/// is skipped when either probe takes a different branch than the base point.
GradCheckResult check_gradients(const ScalarFn& f, const std::vector<ad::Tensor>& inputs,
                                const GradCheckOptions& opt = {});

ad::Tensor random_tensor(ad::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);

}  // namespace nesua::testing
