#pragma once

#include <memory>
#include <string>
#include <vector>

#include "kt/data/types.hpp"

namespace kt::models {

enum class Family { Bkt, Pfa, Dkt, SaktKc, SaktE };

inline constexpr Family kAllFamilies[] = {Family::Bkt, Family::Pfa, Family::Dkt,
                                          Family::SaktKc, Family::SaktE};

const char* family_name(Family f);          // "BKT", "PFA", "DKT", "SAKT-KC", "SAKT-E"
Family parse_family(const std::string& s);  // accepts the names above, case-insensitive
bool is_deep(Family f);

// A trained predictor. Immutable after fit; safe to share across threads.
class FittedModel {
 public:
  virtual ~FittedModel() = default;
  virtual Family family() const = 0;
  // One P(correct) per step, aligned with the sequence. Each prediction
  // uses only the steps before it. Deterministic.
  virtual std::vector<double> predict_sequence(const data::StudentSequence& seq) const = 0;
  virtual std::size_t count_params() const = 0;
};

using ModelPtr = std::shared_ptr<const FittedModel>;

}  // namespace kt::models
