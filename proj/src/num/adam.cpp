#include "kt/num/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace kt::num {

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, double lr, double weight_decay) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: params/grads count mismatch");
  if (state.m.empty()) {
    for (Tensor* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state sized for a different parameter set");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = *grads[k];
    if (!p.same_shape(g) || !p.same_shape(state.m[k]))
      throw std::invalid_argument("adam_step: shape mismatch on parameter " + std::to_string(k));
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = double(g[i]) + weight_decay * double(p[i]);
      m[i] = real(state.beta1 * double(m[i]) + (1.0 - state.beta1) * gi);
      v[i] = real(state.beta2 * double(v[i]) + (1.0 - state.beta2) * gi * gi);
      const double mhat = double(m[i]) / bc1;
      const double vhat = double(v[i]) / bc2;
      p[i] = real(double(p[i]) - lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

}  // namespace kt::num
