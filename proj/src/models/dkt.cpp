#include "kt/models/dkt.hpp"

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

DktNet::DktNet(std::size_t k, const Hyperparams& hyper, std::uint64_t seed)
    : k_(k), hyper_(hyper) {
  if (k == 0) throw std::invalid_argument("DktNet: empty vocabulary");
  const std::size_t d = hyper.d_model;
  embed_input_ = 2 * k > 4 * d;  // memory guard: compress wide one-hots
  d_in_ = embed_input_ ? d : 2 * k;

  Rng rng = Rng::substream(seed, {0x646b74ull});
  if (embed_input_) {
    input_table = uniform_init({2 * k, d_in_}, 1.0 / std::sqrt(double(d_in_)), rng);
  } else {
    input_table = num::Tensor({2 * k, 2 * k});
    for (std::size_t i = 0; i < 2 * k; ++i) input_table.at(i, i) = num::real(1);
  }
  const double bx_bound = 1.0 / std::sqrt(double(d_in_));
  const double bh_bound = 1.0 / std::sqrt(double(d));
  for (int gate = 0; gate < 4; ++gate) {
    wx[gate] = uniform_init({d_in_, d}, bx_bound, rng);
    wh[gate] = uniform_init({d, d}, bh_bound, rng);
    bx[gate] = num::Tensor({d});
    bh[gate] = num::Tensor({d});
  }
  for (std::size_t j = 0; j < d; ++j) bx[1][j] = num::real(1);  // forget gate opens high
  w_out = uniform_init({d, k}, bh_bound, rng);
  b_out = num::Tensor({k});
}

std::vector<num::Tensor*> DktNet::trainable() {
  std::vector<num::Tensor*> out;
  if (embed_input_) out.push_back(&input_table);
  for (int g = 0; g < 4; ++g) {
    out.push_back(&wx[g]);
    out.push_back(&bx[g]);
    out.push_back(&wh[g]);
    out.push_back(&bh[g]);
  }
  out.push_back(&w_out);
  out.push_back(&b_out);
  return out;
}

std::vector<const num::Tensor*> DktNet::trainable() const {
  auto mut = const_cast<DktNet*>(this)->trainable();
  return {mut.begin(), mut.end()};
}

std::size_t DktNet::count_params() const {
  std::size_t total = 0;
  for (const num::Tensor* t : trainable()) total += t->size();
  return total;
}

std::vector<num::Var> DktNet::bind(num::Tape& tape) const {
  std::vector<num::Var> bound;
  for (const num::Tensor* t : trainable()) bound.push_back(tape.leaf(*t));
  return bound;
}

num::Var DktNet::forward_probs(num::Tape& tape, const std::vector<num::Var>& bound,
                               const Batch& batch, bool train, Rng* dropout_rng) const {
  const std::size_t b = batch.rows, steps = batch.steps, d = hyper_.d_model;
  std::size_t bi = 0;
  num::Var table = embed_input_ ? bound[bi++] : tape.leaf(input_table);
  num::Var vwx[4], vbx[4], vwh[4], vbh[4];
  for (int g = 0; g < 4; ++g) {
    vwx[g] = bound[bi++];
    vbx[g] = bound[bi++];
    vwh[g] = bound[bi++];
    vbh[g] = bound[bi++];
  }
  num::Var vw_out = bound[bi++];
  num::Var vb_out = bound[bi++];

  num::Var h = tape.leaf(num::Tensor({b, d}));
  num::Var c = tape.leaf(num::Tensor({b, d}));
  std::vector<num::Var> step_probs;
  step_probs.reserve(steps);
  std::vector<int> ids(b), targets(b);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t r = 0; r < b; ++r) {
      std::size_t flat = r * steps + t;
      int prev = batch.prev_id[flat];
      // start token and padding both feed the zero row
      ids[r] = prev < 0 ? -1 : batch.prev_correct[flat] * int(k_) + prev;
      targets[r] = batch.target_id[flat];
    }
    num::Var x = tape.embed(table, ids);
    auto gate = [&](int g) {
      return tape.add(tape.add_rowvec(tape.matmul(x, vwx[g]), vbx[g]),
                      tape.add_rowvec(tape.matmul(h, vwh[g]), vbh[g]));
    };
    num::Var gi = tape.sigmoid(gate(0));
    num::Var gf = tape.sigmoid(gate(1));
    num::Var gg = tape.tanh_(gate(2));
    num::Var go = tape.sigmoid(gate(3));
    c = tape.add(tape.mul(gf, c), tape.mul(gi, gg));
    h = tape.mul(go, tape.tanh_(c));

    num::Var head_in = h;
    if (train && dropout_rng) head_in = tape.dropout(h, hyper_.dropout_rate, *dropout_rng, train);
    num::Var y = tape.sigmoid(tape.add_rowvec(tape.matmul(head_in, vw_out), vb_out));
    step_probs.push_back(tape.gather_cols(y, targets));
  }
  return tape.concat_flat(step_probs);
}

num::Tensor DktNet::flat_labels(const Batch& batch) const {
  num::Tensor out({batch.rows * batch.steps});
  for (std::size_t t = 0; t < batch.steps; ++t)
    for (std::size_t r = 0; r < batch.rows; ++r)
      out[flat_index(batch, r, t)] = batch.labels.at(r, t);
  return out;
}

num::Tensor DktNet::flat_mask(const Batch& batch) const {
  num::Tensor out({batch.rows * batch.steps});
  for (std::size_t t = 0; t < batch.steps; ++t)
    for (std::size_t r = 0; r < batch.rows; ++r)
      out[flat_index(batch, r, t)] = batch.valid.at(r, t);
  return out;
}

}  // namespace kt::models
