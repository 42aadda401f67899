#pragma once

#include <string>

#include "kt/models/train.hpp"

namespace kt::models {

// Classical models are written as JSON; deep models use the tensor
// archive with family, vocabulary, hyperparameters, seed, and training
// curve in the manifest. load_model sniffs the format.
void save_model(const std::string& path, const FittedModel& model);
ModelPtr load_model(const std::string& path);

}  // namespace kt::models
