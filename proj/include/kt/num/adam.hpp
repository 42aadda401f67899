#pragma once

#include <vector>

#include "kt/num/tensor.hpp"

namespace kt::num {

// Bias-corrected adaptive-moment optimizer state. Accumulators are shaped
// like their parameters and created on the first step.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// In-place update. weight_decay adds weight_decay * param to the gradient
// (plain L2, not decoupled). Throws on any shape mismatch.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, double lr, double weight_decay = 0.0);

}  // namespace kt::num
