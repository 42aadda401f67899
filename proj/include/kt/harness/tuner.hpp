#pragma once

#include <cstdint>
#include <vector>

#include "kt/data/types.hpp"
#include "kt/models/hyper.hpp"

namespace kt::harness {

// Search box for one family. Integer ranges are inclusive; learn_rate and
// reg_lambda are sampled log-uniform; num_heads is drawn from the listed
// choices and d_model is snapped to a multiple of it.
struct TunerRanges {
  std::size_t num_steps_lo = 20, num_steps_hi = 100;
  std::size_t batch_lo = 16, batch_hi = 64;
  std::size_t d_model_lo = 64, d_model_hi = 512;
  std::size_t epochs_lo = 10, epochs_hi = 40;
  double dropout_lo = 0.1, dropout_hi = 0.5;
  double lr_lo = 1e-4, lr_hi = 1e-2;
  double reg_lo = 1e-6, reg_hi = 1e-2;
  std::vector<std::size_t> head_choices{2, 4, 8, 16, 32};
  double decay_lo = 0.7, decay_hi = 0.99;
};

// The published search box (epochs differ between DKT and SAKT).
TunerRanges default_ranges(models::Family family);

// Low-discrepancy draw for trial `index` (0-based): one Halton point,
// rotated by a seed-derived offset per dimension, mapped into the box.
models::Hyperparams draw_trial(models::Family family, const TunerRanges& ranges,
                               std::size_t index, std::uint64_t seed);

struct TrialResult {
  models::Hyperparams hyper;
  std::vector<double> fold_aucs;  // 4 folds
  double mean_auc = 0.0;
};

struct TuneResult {
  models::Hyperparams best;
  std::size_t best_trial = 0;
  std::vector<TrialResult> trials;
};

// Quasi-random search: n_trials draws, each scored by 4-fold
// cross-validation over the validation sample's assignment logs; returns
// the argmax by mean AUC. Deterministic in seed.
TuneResult tune_hyperparams(models::Family family, const data::Sample& validation,
                            int n_trials, std::uint64_t seed,
                            const TunerRanges* ranges = nullptr, std::size_t workers = 1);

inline constexpr int kTunerFolds = 4;
inline constexpr int kDefaultTrials = 50;

}  // namespace kt::harness
