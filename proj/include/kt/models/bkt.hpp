#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kt/models/model.hpp"

namespace kt::models {

// Mastery HMM parameters for one KC: prior, learn, guess, slip, forget.
struct BktKcParams {
  double L0 = 0.5;
  double T = 0.2;
  double G = 0.2;
  double S = 0.1;
  double F = 0.05;
};

inline constexpr double kBktParamMin = 1e-3;
inline constexpr BktKcParams kBktInit{0.5, 0.2, 0.2, 0.1, 0.05};
inline constexpr double kBktTol = 1e-4;
inline constexpr int kBktMaxIter = 100;

struct BktFitResult {
  BktKcParams params;
  double log_likelihood = 0.0;  // of the returned params
  int iterations = 0;           // accepted update steps
  std::vector<double> ll_trace; // one entry per evaluation, starting at init
};

// Baum-Welch over binary response sequences of one KC. Stops once an
// update improves the log-likelihood by less than tol (that update is
// discarded) or after max_iter accepted updates. Parameters are clamped
// to [kBktParamMin, 1 - kBktParamMin] after every update. Throws when no
// sequence has any observation.
BktFitResult bkt_fit_kc(const std::vector<std::vector<std::uint8_t>>& sequences,
                        const BktKcParams& init = kBktInit, double tol = kBktTol,
                        int max_iter = kBktMaxIter);

// pred[t] = P(correct at t) given responses 0..t-1: emit from the current
// mastery belief, posterior-update on the observed response, transition.
std::vector<double> bkt_predict(const BktKcParams& p, const std::vector<std::uint8_t>& responses);

struct BktParams {
  std::map<std::string, BktKcParams> per_kc;  // keyed by raw kc_id
  BktKcParams fallback;
  std::map<std::string, BktFitResult> fit_info;
  std::vector<std::string> warnings;
};

// Arithmetic mean of each parameter over fitted KCs. Throws when empty.
BktKcParams bkt_fallback(const BktParams& params);

class BktModel : public FittedModel {
 public:
  explicit BktModel(BktParams params) : params_(std::move(params)) {}

  Family family() const override { return Family::Bkt; }
  std::vector<double> predict_sequence(const data::StudentSequence& seq) const override;
  // 5 per fitted KC + 5 fallback
  std::size_t count_params() const override { return 5 * params_.per_kc.size() + 5; }

  const BktParams& params() const { return params_; }

  nlohmann::json to_json() const;
  static BktModel from_json(const nlohmann::json& j);

 private:
  BktParams params_;
};

// Fits one HMM per KC present in the sequences (concurrently when
// workers > 1), then averages the fallback entry.
BktModel bkt_fit(const std::vector<data::StudentSequence>& sequences, std::size_t workers = 1);

}  // namespace kt::models
