#include "kt/models/train.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "kt/num/adam.hpp"

namespace kt::models {

const Hyperparams& DeepModel::hyper() const {
  if (const DktNet* n = dkt()) return n->hyper();
  return sakt()->hyper();
}

std::size_t DeepModel::count_params() const {
  if (const DktNet* n = dkt()) return n->count_params();
  return sakt()->count_params();
}

std::vector<double> DeepModel::predict_sequence(const data::StudentSequence& seq) const {
  std::vector<double> out(seq.steps.size(), 0.0);
  if (seq.steps.empty()) return out;
  const std::size_t num_steps = hyper().num_steps;
  std::vector<data::StudentSequence> one{seq};
  std::vector<Window> windows = make_windows(one, num_steps);
  std::vector<Batch> batches =
      stack_batches(windows, num_steps, windows.size(), unit(), nullptr, nullptr);
  const Batch& batch = batches.front();

  num::Tape tape;
  num::Var probs;
  if (const DktNet* n = dkt()) {
    probs = n->forward_probs(tape, n->bind(tape), batch, false, nullptr);
  } else {
    const SaktNet* s = sakt();
    probs = s->forward_probs(tape, s->bind(tape), batch, false, nullptr);
  }
  const num::Tensor& p = tape.value(probs);
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const Window& w = windows[r];
    std::size_t pad = num_steps - w.len;
    for (std::size_t k = 0; k < w.len; ++k) {
      std::size_t flat = dkt() ? DktNet::flat_index(batch, r, pad + k)
                               : SaktNet::flat_index(batch, r, pad + k);
      out[w.begin + k] = double(p[flat]);
    }
  }
  return out;
}

namespace {

// Dense ids of the training unit seen fewer than kRareIdThreshold times.
RareIdSub find_rare_ids(const std::vector<data::StudentSequence>& sequences, Unit unit,
                        int oov_id) {
  std::unordered_map<int, std::size_t> freq;
  for (const auto& seq : sequences)
    for (const auto& step : seq.steps) ++freq[unit == Unit::Kc ? step.kc : step.exercise];
  RareIdSub sub;
  sub.oov_id = oov_id;
  sub.prob = kRareIdSubProb;
  for (const auto& [id, n] : freq)
    if (n < kRareIdThreshold) sub.rare_ids.insert(id);
  return sub;
}

template <typename Net>
std::vector<double> train_net(Net& net, const std::vector<data::StudentSequence>& sequences,
                              Unit unit, const Hyperparams& hyper, double weight_decay,
                              std::uint64_t seed, int oov_id) {
  std::vector<Window> windows = make_windows(sequences, hyper.num_steps);
  if (windows.empty()) throw std::invalid_argument("fit_deep: no training windows");
  RareIdSub sub = find_rare_ids(sequences, unit, oov_id);

  num::AdamState adam;
  std::vector<double> curve;
  curve.reserve(hyper.num_epochs);
  double lr = hyper.learn_rate;
  for (std::size_t epoch = 0; epoch < hyper.num_epochs; ++epoch) {
    Rng shuffle_rng = Rng::substream(seed, {0x736875666665ull, epoch});
    Rng sub_rng = Rng::substream(seed, {0x737562ull, epoch});
    Rng drop_rng = Rng::substream(seed, {0x64726f70ull, epoch});
    shuffle_rng.shuffle(windows);
    std::vector<Batch> batches = stack_batches(windows, hyper.num_steps, hyper.batch_size, unit,
                                               sub.rare_ids.empty() ? nullptr : &sub, &sub_rng);
    double loss_sum = 0.0, position_count = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch& batch = batches[b];
      num::Tape tape;
      std::vector<num::Var> bound = net.bind(tape);
      num::Var probs = net.forward_probs(tape, bound, batch, true, &drop_rng);
      num::Var loss =
          tape.bce_mean(probs, net.flat_labels(batch), net.flat_mask(batch));
      double loss_value = double(tape.value(loss)[0]);
      if (!std::isfinite(loss_value)) {
        throw std::runtime_error("fit_deep: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(b));
      }
      tape.backward(loss);
      std::vector<num::Tensor*> params = net.trainable();
      std::vector<const num::Tensor*> grads;
      grads.reserve(bound.size());
      for (num::Var v : bound) grads.push_back(&tape.grad(v));
      num::adam_step(params, grads, adam, lr, weight_decay);

      double positions = 0.0;
      for (num::real m : batch.valid.data()) positions += double(m);
      loss_sum += loss_value * positions;
      position_count += positions;
    }
    curve.push_back(loss_sum / position_count);
    lr *= hyper.learn_decay_rate;
  }
  return curve;
}

}  // namespace

std::shared_ptr<DeepModel> fit_deep(Family family,
                                    const std::vector<data::StudentSequence>& sequences,
                                    data::Vocabulary vocab, const Hyperparams& hyper,
                                    std::uint64_t seed) {
  if (!is_deep(family)) throw std::invalid_argument("fit_deep: classical family");
  validate_hyperparams(family, hyper);
  if (sequences.empty()) throw std::invalid_argument("fit_deep: no sequences");

  std::shared_ptr<DeepModel> model;
  std::vector<double> curve;
  if (family == Family::Dkt) {
    DktNet net(vocab.kc_count(), hyper, seed);
    curve = train_net(net, sequences, Unit::Kc, hyper, hyper.reg_lambda, seed, vocab.oov_kc());
    model = std::make_shared<DeepModel>(family, std::move(vocab), std::move(net));
  } else {
    Unit unit = family == Family::SaktE ? Unit::Exercise : Unit::Kc;
    std::size_t v = unit == Unit::Kc ? vocab.kc_count() : vocab.exercise_count();
    int oov = unit == Unit::Kc ? vocab.oov_kc() : vocab.oov_exercise();
    SaktNet net(v, hyper, seed);
    curve = train_net(net, sequences, unit, hyper, 0.0, seed, oov);
    model = std::make_shared<DeepModel>(family, std::move(vocab), std::move(net));
  }
  model->set_training_curve(std::move(curve));
  model->set_train_seed(seed);
  return model;
}

ModelPtr fit_model(Family family, const std::vector<data::StudentSequence>& sequences,
                   const data::Vocabulary& vocab, const Hyperparams* hyper, std::uint64_t seed,
                   std::size_t workers) {
  switch (family) {
    case Family::Bkt:
      return std::make_shared<BktModel>(bkt_fit(sequences, workers));
    case Family::Pfa:
      return std::make_shared<PfaModel>(pfa_fit(sequences));
    default: {
      Hyperparams h = hyper ? *hyper : tuned_defaults(family);
      return fit_deep(family, sequences, vocab, h, seed);
    }
  }
}

}  // namespace kt::models
