#pragma once

#include <cstdint>
#include <vector>

#include "kt/models/batch.hpp"
#include "kt/models/hyper.hpp"
#include "kt/num/tape.hpp"

namespace kt::models {

// LSTM over one-hot (previous KC, previous correctness) inputs with a
// dense per-KC sigmoid head. K counts the OOV slot. When 2K exceeds
// 4*d_model the one-hot is replaced by a trained input embedding.
class DktNet {
 public:
  DktNet(std::size_t k, const Hyperparams& hyper, std::uint64_t seed);

  std::size_t k() const { return k_; }
  bool has_input_embedding() const { return embed_input_; }
  const Hyperparams& hyper() const { return hyper_; }

  // Leaf nodes for every trainable tensor, in trainable() order.
  std::vector<num::Var> bind(num::Tape& tape) const;

  // Flat probabilities at the target KC, kProbsTMajor layout: index t*B+b.
  num::Var forward_probs(num::Tape& tape, const std::vector<num::Var>& bound, const Batch& batch,
                         bool train, Rng* dropout_rng) const;
  static std::size_t flat_index(const Batch& b, std::size_t bi, std::size_t t) {
    return t * b.rows + bi;
  }
  num::Tensor flat_labels(const Batch& batch) const;
  num::Tensor flat_mask(const Batch& batch) const;

  std::vector<num::Tensor*> trainable();
  std::vector<const num::Tensor*> trainable() const;
  std::size_t count_params() const;

  // gates ordered i, f, g, o
  num::Tensor wx[4], bx[4], wh[4], bh[4];
  num::Tensor w_out, b_out;
  num::Tensor input_table;  // trained embedding when embed_input_, else identity

 private:
  std::size_t k_ = 0;
  std::size_t d_in_ = 0;
  bool embed_input_ = false;
  Hyperparams hyper_;
};

}  // namespace kt::models
