#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nesua::testing {

namespace {

struct Eval {
  double value;
  std::vector<std::uint8_t> branches;
};

Eval evaluate(const ScalarFn& f, const std::vector<ad::Tensor>& inputs) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  const double v = f(tape, vars).item();
  return {v, tape.branch_signature()};
}

}  // namespace

ad::Tensor random_tensor(ad::Shape shape, std::mt19937_64& rng, double lo, double hi) {
  ad::Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

GradCheckResult check_gradients(const ScalarFn& f, const std::vector<ad::Tensor>& inputs,
                                const GradCheckOptions& opt) {
  GradCheckResult res;

  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.variable(t));
  ad::Var out = f(tape, vars);
  const auto base_branches = tape.branch_signature();
  tape.backward(out);

  std::mt19937_64 rng(opt.coord_seed);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto analytic = vars[i].grad();
    std::vector<std::size_t> coords(inputs[i].numel());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opt.max_coords_per_input > 0 && coords.size() > opt.max_coords_per_input) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opt.max_coords_per_input);
    }
    for (std::size_t c : coords) {
      const double x = inputs[i][c];
      const double h = 1e-5 * std::max(1.0, std::abs(x));
      auto plus = inputs;
      auto minus = inputs;
      plus[i][c] = x + h;
      minus[i][c] = x - h;
      const Eval ep = evaluate(f, plus);
      const Eval em = evaluate(f, minus);
      if (ep.branches != base_branches || em.branches != base_branches) {
        ++res.skipped;
        continue;
      }
      const double numeric = (ep.value - em.value) / (2.0 * h);
      const double a = analytic.empty() ? 0.0 : analytic[c];
      const double err = std::abs(a - numeric);
      res.worst_abs = std::max(res.worst_abs, err);
      ++res.checked;
      if (err > std::max(opt.abs_tol, opt.rel_tol * std::max(std::abs(a), std::abs(numeric)))) {
        ++res.failed;
        if (res.first_failure.empty()) {
          std::ostringstream os;
          os << "input " << i << " coord " << c << ": analytic " << a << " numeric " << numeric;
          res.first_failure = os.str();
        }
      }
    }
  }
  return res;
}

}  // namespace nesua::testing
