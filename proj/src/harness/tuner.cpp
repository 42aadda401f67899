#include "kt/harness/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "kt/data/sequences.hpp"
#include "kt/metrics/classify.hpp"
#include "kt/models/train.hpp"
#include "kt/rng.hpp"

namespace kt::harness {

namespace {

double halton(std::size_t index, unsigned base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= double(base);
    r += f * double(index % base);
    index /= base;
  }
  return r;
}

constexpr unsigned kBases[8] = {2, 3, 5, 7, 11, 13, 17, 19};

std::size_t map_int(double u, std::size_t lo, std::size_t hi) {
  auto v = lo + std::size_t(u * double(hi - lo + 1));
  return std::min(v, hi);
}

double map_log(double u, double lo, double hi) {
  return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
}

}  // namespace

TunerRanges default_ranges(models::Family family) {
  TunerRanges r;
  if (family == models::Family::Dkt) {
    r.epochs_lo = 100;
    r.epochs_hi = 300;
  }
  return r;
}

models::Hyperparams draw_trial(models::Family family, const TunerRanges& ranges,
                               std::size_t index, std::uint64_t seed) {
  if (!models::is_deep(family)) throw std::invalid_argument("draw_trial: classical family");
  // Cranley-Patterson rotation decouples the lattice from the seed.
  Rng rot_rng = Rng::substream(seed, {0x74756e65ull, std::uint64_t(family)});
  double rot[8];
  for (double& v : rot) v = rot_rng.next_double();
  double u[8];
  for (int d = 0; d < 8; ++d) {
    double x = halton(index + 1, kBases[d]) + rot[d];
    u[d] = x - std::floor(x);
  }

  models::Hyperparams h;
  h.num_steps = map_int(u[0], ranges.num_steps_lo, ranges.num_steps_hi);
  h.batch_size = map_int(u[1], ranges.batch_lo, ranges.batch_hi);
  h.d_model = map_int(u[2], ranges.d_model_lo, ranges.d_model_hi);
  h.num_epochs = map_int(u[3], ranges.epochs_lo, ranges.epochs_hi);
  h.dropout_rate = ranges.dropout_lo + u[4] * (ranges.dropout_hi - ranges.dropout_lo);
  h.learn_rate = map_log(u[5], ranges.lr_lo, ranges.lr_hi);
  if (family == models::Family::Dkt) {
    h.reg_lambda = map_log(u[6], ranges.reg_lo, ranges.reg_hi);
    h.num_heads = 1;
    h.learn_decay_rate = 1.0;
  } else {
    std::size_t hi = map_int(u[6], 0, ranges.head_choices.size() - 1);
    h.num_heads = ranges.head_choices[hi];
    h.learn_decay_rate = ranges.decay_lo + u[7] * (ranges.decay_hi - ranges.decay_lo);
    // snap d_model onto the head grid, staying inside the box
    std::size_t snapped = (h.d_model / h.num_heads) * h.num_heads;
    if (snapped < ranges.d_model_lo || snapped < h.num_heads) snapped += h.num_heads;
    h.d_model = std::min(snapped, (ranges.d_model_hi / h.num_heads) * h.num_heads);
    h.reg_lambda = 0.0;
  }
  return h;
}

namespace {

// Assignment logs shuffled once, dealt round-robin into kTunerFolds folds.
std::vector<int> fold_of_log(const data::Sample& validation, std::uint64_t seed,
                             std::vector<std::string>& log_ids) {
  log_ids.assign(validation.assignment_log_ids.begin(), validation.assignment_log_ids.end());
  Rng rng = Rng::substream(seed, {0x666f6c64ull});
  rng.shuffle(log_ids);
  std::vector<int> fold(log_ids.size());
  for (std::size_t i = 0; i < log_ids.size(); ++i) fold[i] = int(i % kTunerFolds);
  return fold;
}

double fold_auc(models::Family family, const models::Hyperparams& hyper,
                const data::Sample& train_part, const data::Sample& eval_part,
                std::uint64_t seed) {
  data::Vocabulary vocab = data::build_vocabulary(train_part);
  std::vector<data::StudentSequence> train_seqs = data::build_sequences(train_part, vocab);
  models::ModelPtr model = models::fit_model(family, train_seqs, vocab, &hyper, seed);
  std::vector<data::StudentSequence> eval_seqs = data::build_sequences(eval_part, vocab);
  metrics::ScoredLabels scored;
  for (const auto& seq : eval_seqs) {
    std::vector<double> probs = model->predict_sequence(seq);
    for (std::size_t i = 0; i < seq.steps.size(); ++i) scored.push(seq.steps[i].correct, probs[i]);
  }
  return metrics::auc(scored);
}

}  // namespace

TuneResult tune_hyperparams(models::Family family, const data::Sample& validation, int n_trials,
                            std::uint64_t seed, const TunerRanges* ranges, std::size_t workers) {
  if (n_trials < 1) throw std::invalid_argument("tune_hyperparams: n_trials must be >= 1");
  if (validation.rows.empty()) throw std::invalid_argument("tune_hyperparams: empty sample");
  TunerRanges box = ranges ? *ranges : default_ranges(family);
  (void)workers;  // trials are sequential; deep fits own all cores' worth of work anyway

  std::vector<std::string> log_ids;
  std::vector<int> fold = fold_of_log(validation, seed, log_ids);
  std::map<std::string, int> fold_by_log;
  for (std::size_t i = 0; i < log_ids.size(); ++i) fold_by_log[log_ids[i]] = fold[i];

  // Pre-split the rows once; trials reuse the same folds.
  std::vector<data::Sample> fold_part(kTunerFolds), rest_part(kTunerFolds);
  for (int k = 0; k < kTunerFolds; ++k) {
    fold_part[k].sample_id = k;
    fold_part[k].year_label = validation.year_label;
    rest_part[k].sample_id = k;
    rest_part[k].year_label = validation.year_label;
  }
  for (const auto& row : validation.rows) {
    int k = fold_by_log.at(row.assignment_log_id);
    for (int f = 0; f < kTunerFolds; ++f) {
      if (f == k) {
        fold_part[f].rows.push_back(row);
        fold_part[f].assignment_log_ids.insert(row.assignment_log_id);
      } else {
        rest_part[f].rows.push_back(row);
        rest_part[f].assignment_log_ids.insert(row.assignment_log_id);
      }
    }
  }

  TuneResult result;
  for (int trial = 0; trial < n_trials; ++trial) {
    TrialResult tr;
    tr.hyper = draw_trial(family, box, std::size_t(trial), seed);
    double sum = 0.0;
    for (int k = 0; k < kTunerFolds; ++k) {
      std::uint64_t fit_seed =
          Rng::substream(seed, {0x7472ull, std::uint64_t(trial), std::uint64_t(k)}).next_u64();
      double auc = fold_auc(family, tr.hyper, rest_part[std::size_t(k)],
                            fold_part[std::size_t(k)], fit_seed);
      tr.fold_aucs.push_back(auc);
      sum += auc;
    }
    tr.mean_auc = sum / kTunerFolds;
    result.trials.push_back(std::move(tr));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.trials.size(); ++i) {
    if (result.trials[i].mean_auc > result.trials[best].mean_auc) best = i;
  }
  result.best_trial = best;
  result.best = result.trials[best].hyper;
  return result;
}

}  // namespace kt::harness
