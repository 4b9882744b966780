#include "trires/adam.hpp"

#include <cmath>

#include "trires/errors.hpp"

namespace trires {

const AdamState::Moments* AdamState::find(const Tensor& param) const {
  const auto it = moments.find(param.id());
  return it == moments.end() ? nullptr : &it->second;
}

void adam_step(std::span<const Tensor> params, AdamState& state, double lr) {
  for (const auto& p : params) {
    if (!p.requires_grad()) throw StateError("adam_step: parameter does not track gradients");
    if (!p.node()->grad_written) {
      throw StateError("adam_step: parameter " + shape_str(p.shape()) +
                       " received no gradient since the last step");
    }
  }
  ++state.t;
  const auto& c = state.config;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (const auto& param : params) {
    Tensor p = param;
    auto& mo = state.moments[p.id()];
    if (mo.m.empty()) {
      mo.m.assign(p.numel(), 0.0);
      mo.v.assign(p.numel(), 0.0);
    }
    dispatch(p.dtype(), [&]<typename T>() {
      auto w = p.mutable_data<T>();
      auto g = p.grad_data<T>();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        mo.m[i] = c.beta1 * mo.m[i] + (1.0 - c.beta1) * gi;
        mo.v[i] = c.beta2 * mo.v[i] + (1.0 - c.beta2) * gi * gi;
        const double m_hat = mo.m[i] / correction1;
        const double v_hat = mo.v[i] / correction2;
        w[i] = static_cast<T>(static_cast<double>(w[i]) - lr * m_hat / (std::sqrt(v_hat) + c.eps));
      }
    });
    p.zero_grad();
  }
}

}  // namespace trires
