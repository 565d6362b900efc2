#include <cmath>
#include <string>

#include "nesua/autodiff.hpp"
#include "nesua/errors.hpp"

namespace nesua::ad {

AdamState AdamState::init(std::span<Tensor* const> params, AdamConfig config) {
  AdamState st;
  st.config = config;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const Tensor* p : params) {
    st.m.emplace_back(p->numel(), 0.0);
    st.v.emplace_back(p->numel(), 0.0);
  }
  return st;
}

void adam_step(std::span<Tensor* const> params, AdamState& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractError("adam_step: optimizer tracks " + std::to_string(state.m.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i]->numel() || state.v[i].size() != params[i]->numel()) {
      throw ContractError("adam_step: moment buffer " + std::to_string(i) + " does not match parameter shape " +
                          shape_string(params[i]->shape()));
    }
    if (params[i]->has_grad() || params[i]->grad.empty()) continue;
    throw ContractError("adam_step: gradient of parameter " + std::to_string(i) + " has the wrong length");
  }

  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    auto values = p.values();
    const bool has = p.has_grad();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = has ? p.grad[j] : 0.0;
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      values[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

void zero_grad(std::span<Tensor* const> params) {
  for (Tensor* p : params) p->zero_grad();
}

}  // namespace nesua::ad
