#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kt/models/model.hpp"

namespace kt::models {

// Logistic-regression weights for one KC: intercept, win weight, fail weight.
struct PfaCoef {
  double beta = 0.0;
  double gamma = 0.0;
  double rho = 0.0;
};

// One supervised example: prior win/fail counts of the student on the KC.
struct PfaFeature {
  std::string kc_id;
  double wins = 0.0;
  double fails = 0.0;
};

inline constexpr double kPfaCoefClamp = 25.0;
inline constexpr int kPfaMaxIter = 50;
inline constexpr double kPfaTol = 1e-8;

// Strictly-prior counts per (student, KC), reset per student. labels[i] is
// the observed correctness of example i.
void pfa_featurize(const std::vector<data::StudentSequence>& sequences,
                   std::vector<PfaFeature>& features, std::vector<std::uint8_t>& labels);

struct PfaFit {
  PfaCoef coef;
  int iterations = 0;
  double log_likelihood = 0.0;
  bool converged = false;
  bool clamped = false;  // hit the separation guard
};

// Full-batch Newton (IRLS) on the Bernoulli log-likelihood of
// sigma(beta + gamma*wins + rho*fails). Coefficients are clamped to
// |c| <= kPfaCoefClamp; non-convergence returns the best iterate seen.
// max_iter = 0 returns the zero init. Throws on empty input.
PfaFit pfa_fit_one(const std::vector<PfaFeature>& features,
                   const std::vector<std::uint8_t>& labels, int max_iter = kPfaMaxIter,
                   double tol = kPfaTol);

double pfa_predict_logit(const PfaCoef& c, double wins, double fails);
double pfa_predict(const PfaCoef& c, double wins, double fails);

struct PfaParams {
  std::map<std::string, PfaCoef> per_kc;  // keyed by raw kc_id
  PfaCoef fallback;
  std::vector<std::string> warnings;
};

class PfaModel : public FittedModel {
 public:
  explicit PfaModel(PfaParams params) : params_(std::move(params)) {}

  Family family() const override { return Family::Pfa; }
  std::vector<double> predict_sequence(const data::StudentSequence& seq) const override;
  // 3 per fitted KC + 3 fallback
  std::size_t count_params() const override { return 3 * params_.per_kc.size() + 3; }

  const PfaParams& params() const { return params_; }

  nlohmann::json to_json() const;
  static PfaModel from_json(const nlohmann::json& j);

 private:
  PfaParams params_;
};

// One logistic fit per KC plus a pooled fallback fit over all examples.
PfaModel pfa_fit(const std::vector<data::StudentSequence>& sequences);

}  // namespace kt::models
