#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "kt/models/bkt.hpp"
#include "kt/models/dkt.hpp"
#include "kt/models/hyper.hpp"
#include "kt/models/pfa.hpp"
#include "kt/models/sakt.hpp"

namespace kt::models {

// A trained DKT or SAKT network plus the vocabulary that defines its id
// space. Evaluation sequences must be built with this vocabulary.
class DeepModel : public FittedModel {
 public:
  DeepModel(Family family, data::Vocabulary vocab, DktNet net)
      : family_(family), vocab_(std::move(vocab)), net_(std::move(net)) {}
  DeepModel(Family family, data::Vocabulary vocab, SaktNet net)
      : family_(family), vocab_(std::move(vocab)), net_(std::move(net)) {}

  Family family() const override { return family_; }
  std::vector<double> predict_sequence(const data::StudentSequence& seq) const override;
  std::size_t count_params() const override;

  const data::Vocabulary& vocab() const { return vocab_; }
  Unit unit() const { return family_ == Family::SaktE ? Unit::Exercise : Unit::Kc; }
  const Hyperparams& hyper() const;
  const std::vector<double>& training_curve() const { return curve_; }
  void set_training_curve(std::vector<double> curve) { curve_ = std::move(curve); }
  std::uint64_t train_seed() const { return train_seed_; }
  void set_train_seed(std::uint64_t s) { train_seed_ = s; }

  const DktNet* dkt() const { return std::get_if<DktNet>(&net_); }
  const SaktNet* sakt() const { return std::get_if<SaktNet>(&net_); }
  DktNet* dkt() { return std::get_if<DktNet>(&net_); }
  SaktNet* sakt() { return std::get_if<SaktNet>(&net_); }

 private:
  Family family_;
  data::Vocabulary vocab_;
  std::variant<DktNet, SaktNet> net_;
  std::vector<double> curve_;
  std::uint64_t train_seed_ = 0;
};

// Trains a fresh network on sequences built from the training vocabulary.
// Ids occurring fewer than 2 times are swapped for OOV with probability
// 0.1 during training so the OOV row gets gradient. Deterministic in seed.
// Throws on empty input or a non-finite loss.
std::shared_ptr<DeepModel> fit_deep(Family family, const std::vector<data::StudentSequence>& sequences,
                                    data::Vocabulary vocab, const Hyperparams& hyper,
                                    std::uint64_t seed);

// Family dispatch; hyper is ignored for BKT and PFA.
ModelPtr fit_model(Family family, const std::vector<data::StudentSequence>& sequences,
                   const data::Vocabulary& vocab, const Hyperparams* hyper, std::uint64_t seed,
                   std::size_t workers = 1);

inline constexpr double kRareIdSubProb = 0.1;
inline constexpr std::size_t kRareIdThreshold = 2;  // ids seen fewer times are "rare"

}  // namespace kt::models
