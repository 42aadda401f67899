#pragma once

#include <cstdint>
#include <vector>

#include "kt/models/batch.hpp"
#include "kt/models/hyper.hpp"
#include "kt/num/tape.hpp"

namespace kt::models {

inline constexpr num::real kLayerNormEps = num::real(1e-5);

// Causal multi-head attention over past interactions, queried by the id
// of the interaction being predicted. V counts the OOV slot. Keys and
// values come from interaction embeddings (row 2*id + response, plus a
// start-token row and a response embedding and position embedding);
// queries come from a separate target-id embedding.
class SaktNet {
 public:
  SaktNet(std::size_t v, const Hyperparams& hyper, std::uint64_t seed);

  std::size_t v() const { return v_; }
  const Hyperparams& hyper() const { return hyper_; }

  std::vector<num::Var> bind(num::Tape& tape) const;

  // Flat probabilities, row-major layout: index b*T+t.
  num::Var forward_probs(num::Tape& tape, const std::vector<num::Var>& bound, const Batch& batch,
                         bool train, Rng* dropout_rng) const;
  static std::size_t flat_index(const Batch& b, std::size_t bi, std::size_t t) {
    return bi * b.steps + t;
  }
  num::Tensor flat_labels(const Batch& batch) const;
  num::Tensor flat_mask(const Batch& batch) const;

  std::vector<num::Tensor*> trainable();
  std::vector<const num::Tensor*> trainable() const;
  std::size_t count_params() const;

  num::Tensor interaction_emb;  // (2V+1) x d; row 2V is the start token
  num::Tensor response_emb;     // 2 x d
  num::Tensor position_emb;     // T x d
  num::Tensor query_emb;        // V x d
  num::Tensor wq, wk, wv, wo;   // d x d
  num::Tensor w1, b1, w2, b2;   // position-wise FFN, width d
  num::Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
  num::Tensor w_y, b_y;  // d x 1, 1

 private:
  std::size_t v_ = 0;
  Hyperparams hyper_;
};

}  // namespace kt::models
