#include "kt/models/sakt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kt::models {

namespace {

num::Tensor uniform_init(std::vector<std::size_t> shape, double bound, Rng& rng) {
  num::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = num::real(rng.uniform(-bound, bound));
  return t;
}

}  // namespace

SaktNet::SaktNet(std::size_t v, const Hyperparams& hyper, std::uint64_t seed)
    : v_(v), hyper_(hyper) {
  if (v == 0) throw std::invalid_argument("SaktNet: empty vocabulary");
  const std::size_t d = hyper.d_model, steps = hyper.num_steps;
  if (hyper.num_heads == 0 || d % hyper.num_heads != 0)
    throw std::invalid_argument("SaktNet: d_model must be divisible by num_heads");

  Rng rng = Rng::substream(seed, {0x73616b74ull});
  const double bound = 1.0 / std::sqrt(double(d));
  interaction_emb = uniform_init({2 * v + 1, d}, bound, rng);
  response_emb = uniform_init({2, d}, bound, rng);
  position_emb = uniform_init({steps, d}, bound, rng);
  query_emb = uniform_init({v, d}, bound, rng);
  wq = uniform_init({d, d}, bound, rng);
  wk = uniform_init({d, d}, bound, rng);
  wv = uniform_init({d, d}, bound, rng);
  wo = uniform_init({d, d}, bound, rng);
  w1 = uniform_init({d, d}, bound, rng);
  b1 = num::Tensor({d});
  w2 = uniform_init({d, d}, bound, rng);
  b2 = num::Tensor({d});
  ln1_gain = num::Tensor({d}, num::real(1));
  ln1_bias = num::Tensor({d});
  ln2_gain = num::Tensor({d}, num::real(1));
  ln2_bias = num::Tensor({d});
  w_y = uniform_init({d, 1}, bound, rng);
  b_y = num::Tensor({1});
}

std::vector<num::Tensor*> SaktNet::trainable() {
  return {&interaction_emb, &response_emb, &position_emb, &query_emb, &wq, &wk,
          &wv,              &wo,           &w1,           &b1,        &w2, &b2,
          &ln1_gain,        &ln1_bias,     &ln2_gain,     &ln2_bias,  &w_y, &b_y};
}

std::vector<const num::Tensor*> SaktNet::trainable() const {
  auto mut = const_cast<SaktNet*>(this)->trainable();
  return {mut.begin(), mut.end()};
}

std::size_t SaktNet::count_params() const {
  std::size_t total = 0;
  for (const num::Tensor* t : trainable()) total += t->size();
  return total;
}

std::vector<num::Var> SaktNet::bind(num::Tape& tape) const {
  std::vector<num::Var> bound;
  for (const num::Tensor* t : trainable()) bound.push_back(tape.leaf(*t));
  return bound;
}

num::Var SaktNet::forward_probs(num::Tape& tape, const std::vector<num::Var>& bound,
                                const Batch& batch, bool train, Rng* dropout_rng) const {
  const std::size_t steps = batch.steps, d = hyper_.d_model, heads = hyper_.num_heads;
  const std::size_t dh = d / heads;
  if (steps > position_emb.rows())
    throw std::invalid_argument("SaktNet: batch longer than the position table");

  std::size_t bi = 0;
  num::Var e_int = bound[bi++], e_resp = bound[bi++], e_pos = bound[bi++], e_query = bound[bi++];
  num::Var vwq = bound[bi++], vwk = bound[bi++], vwv = bound[bi++], vwo = bound[bi++];
  num::Var vw1 = bound[bi++], vb1 = bound[bi++], vw2 = bound[bi++], vb2 = bound[bi++];
  num::Var vln1g = bound[bi++], vln1b = bound[bi++], vln2g = bound[bi++], vln2b = bound[bi++];
  num::Var vw_y = bound[bi++], vb_y = bound[bi++];

  const int start_row = 2 * int(v_);
  std::vector<int> positions(steps);
  for (std::size_t t = 0; t < steps; ++t) positions[t] = int(t);

  std::vector<num::Var> seq_probs;
  seq_probs.reserve(batch.rows);
  std::vector<int> int_ids(steps), resp_ids(steps), tgt_ids(steps);
  for (std::size_t r = 0; r < batch.rows; ++r) {
    for (std::size_t t = 0; t < steps; ++t) {
      std::size_t flat = r * steps + t;
      if (batch.start[flat]) {
        int_ids[t] = start_row;
        resp_ids[t] = -1;  // start token carries no response
      } else if (batch.prev_id[flat] < 0) {
        int_ids[t] = -1;  // padding: zero rows
        resp_ids[t] = -1;
      } else {
        int_ids[t] = 2 * batch.prev_id[flat] + batch.prev_correct[flat];
        resp_ids[t] = batch.prev_correct[flat];
      }
      tgt_ids[t] = batch.valid.at(r, t) != num::real(0) ? batch.target_id[flat] : -1;
    }
    num::Var z = tape.add(tape.add(tape.embed(e_int, int_ids), tape.embed(e_resp, resp_ids)),
                          tape.embed(e_pos, positions));
    num::Var q = tape.matmul(tape.embed(e_query, tgt_ids), vwq);
    num::Var k = tape.matmul(z, vwk);
    num::Var v = tape.matmul(z, vwv);

    // In-window causality: position t sees keys j < t that are valid,
    // plus its own position (which keeps padded rows softmax-safe).
    num::Tensor mask({steps, steps});
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t j = 0; j < t; ++j) {
        if (batch.valid.at(r, j) != num::real(0)) mask.at(t, j) = num::real(1);
      }
      mask.at(t, t) = num::real(1);
    }

    std::vector<num::Var> head_out;
    head_out.reserve(heads);
    for (std::size_t hh = 0; hh < heads; ++hh) {
      num::Var qh = tape.slice_cols(q, hh * dh, (hh + 1) * dh);
      num::Var kh = tape.slice_cols(k, hh * dh, (hh + 1) * dh);
      num::Var vh = tape.slice_cols(v, hh * dh, (hh + 1) * dh);
      num::Var scores = tape.scale(tape.matmul_nt(qh, kh), num::real(1.0 / std::sqrt(double(dh))));
      num::Var attn = tape.softmax_lastdim(scores, mask);
      head_out.push_back(tape.matmul(attn, vh));
    }
    num::Var ctx = tape.matmul(heads == 1 ? head_out[0] : tape.concat_cols(head_out), vwo);
    if (train && dropout_rng) ctx = tape.dropout(ctx, hyper_.dropout_rate, *dropout_rng, train);
    num::Var o1 = tape.layer_norm(tape.add(z, ctx), vln1g, vln1b, kLayerNormEps);

    num::Var ffn = tape.add_rowvec(
        tape.matmul(tape.relu(tape.add_rowvec(tape.matmul(o1, vw1), vb1)), vw2), vb2);
    if (train && dropout_rng) ffn = tape.dropout(ffn, hyper_.dropout_rate, *dropout_rng, train);
    num::Var o2 = tape.layer_norm(tape.add(o1, ffn), vln2g, vln2b, kLayerNormEps);

    seq_probs.push_back(tape.sigmoid(tape.add_rowvec(tape.matmul(o2, vw_y), vb_y)));
  }
  return tape.concat_flat(seq_probs);
}

num::Tensor SaktNet::flat_labels(const Batch& batch) const {
  num::Tensor out({batch.rows * batch.steps});
  std::copy(batch.labels.data().begin(), batch.labels.data().end(), out.data().begin());
  return out;
}

num::Tensor SaktNet::flat_mask(const Batch& batch) const {
  num::Tensor out({batch.rows * batch.steps});
  std::copy(batch.valid.data().begin(), batch.valid.data().end(), out.data().begin());
  return out;
}

}  // namespace kt::models
