#pragma once

#include <cstddef>

#include <json.hpp>

#include "kt/models/model.hpp"

namespace kt::models {

struct Hyperparams {
  std::size_t num_steps = 40;
  std::size_t batch_size = 16;
  std::size_t d_model = 96;
  std::size_t num_epochs = 100;
  double dropout_rate = 0.278;
  double learn_rate = 2e-3;
  double reg_lambda = 0.0;         // DKT weight decay
  std::size_t num_heads = 1;       // SAKT
  double learn_decay_rate = 1.0;   // SAKT per-epoch learning-rate factor

  nlohmann::json to_json() const;
  static Hyperparams from_json(const nlohmann::json& j);
};

// Published tuned values per family. Throws for classical families.
Hyperparams tuned_defaults(Family f);

// Shrunk sizes for fast runs; same structure, minutes not hours.
Hyperparams test_scale_defaults(Family f);

void validate_hyperparams(Family f, const Hyperparams& h);

}  // namespace kt::models
