#include "kt/models/pfa.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace kt::models {

namespace {

double sigma(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double bernoulli_ll(const std::vector<PfaFeature>& features,
                    const std::vector<std::uint8_t>& labels, const PfaCoef& c) {
  double ll = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    double z = c.beta + c.gamma * features[i].wins + c.rho * features[i].fails;
    // log sigma(z) = -log(1+e^{-z}); stable via log1p on the negative side
    double log_p = z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
    double log_q = z >= 0.0 ? -z - std::log1p(std::exp(-z)) : -std::log1p(std::exp(z));
    ll += labels[i] ? log_p : log_q;
  }
  return ll;
}

// Solves the symmetric 3x3 system H x = g by Gaussian elimination with
// partial pivoting. Returns false when the pivot underflows.
bool solve3(std::array<std::array<double, 3>, 3> h, std::array<double, 3>& g) {
  for (int k = 0; k < 3; ++k) {
    int piv = k;
    for (int i = k + 1; i < 3; ++i) {
      if (std::abs(h[i][k]) > std::abs(h[piv][k])) piv = i;
    }
    if (std::abs(h[piv][k]) < 1e-300) return false;
    std::swap(h[k], h[piv]);
    std::swap(g[k], g[piv]);
    for (int i = k + 1; i < 3; ++i) {
      double f = h[i][k] / h[k][k];
      for (int j = k; j < 3; ++j) h[i][j] -= f * h[k][j];
      g[i] -= f * g[k];
    }
  }
  for (int k = 3; k-- > 0;) {
    for (int j = k + 1; j < 3; ++j) g[k] -= h[k][j] * g[j];
    g[k] /= h[k][k];
  }
  return true;
}

PfaCoef clamp_coef(PfaCoef c, bool* hit) {
  auto cl = [&](double v) {
    if (std::abs(v) > kPfaCoefClamp) {
      *hit = true;
      return std::copysign(kPfaCoefClamp, v);
    }
    return v;
  };
  c.beta = cl(c.beta);
  c.gamma = cl(c.gamma);
  c.rho = cl(c.rho);
  return c;
}

}  // namespace

void pfa_featurize(const std::vector<data::StudentSequence>& sequences,
                   std::vector<PfaFeature>& features, std::vector<std::uint8_t>& labels) {
  features.clear();
  labels.clear();
  for (const auto& seq : sequences) {
    std::map<std::string, std::pair<double, double>> counts;  // kc -> (wins, fails)
    for (const auto& step : seq.steps) {
      auto& [wins, fails] = counts[step.kc_id];
      features.push_back({step.kc_id, wins, fails});
      labels.push_back(step.correct);
      if (step.correct) {
        wins += 1.0;
      } else {
        fails += 1.0;
      }
    }
  }
}

PfaFit pfa_fit_one(const std::vector<PfaFeature>& features,
                   const std::vector<std::uint8_t>& labels, int max_iter, double tol) {
  if (features.empty() || features.size() != labels.size()) {
    throw std::invalid_argument("pfa_fit_one: empty or mismatched input");
  }
  PfaFit fit;
  fit.log_likelihood = bernoulli_ll(features, labels, fit.coef);

  PfaCoef c = fit.coef;
  for (int k = 1; k <= max_iter; ++k) {
    std::array<double, 3> g{0, 0, 0};
    std::array<std::array<double, 3>, 3> h{};
    for (std::size_t i = 0; i < features.size(); ++i) {
      std::array<double, 3> x{1.0, features[i].wins, features[i].fails};
      double p = sigma(c.beta + c.gamma * x[1] + c.rho * x[2]);
      double r = double(labels[i]) - p;
      double w = p * (1.0 - p);
      for (int a = 0; a < 3; ++a) {
        g[a] += r * x[a];
        for (int b = 0; b < 3; ++b) h[a][b] += w * x[a] * x[b];
      }
    }
    for (int a = 0; a < 3; ++a) h[a][a] += 1e-9;  // ridge keeps the solve well-posed
    if (!solve3(h, g)) break;
    c.beta += g[0];
    c.gamma += g[1];
    c.rho += g[2];
    c = clamp_coef(c, &fit.clamped);

    double ll = bernoulli_ll(features, labels, c);
    double step = std::max({std::abs(g[0]), std::abs(g[1]), std::abs(g[2])});
    if (ll >= fit.log_likelihood) {
      fit.coef = c;
      fit.log_likelihood = ll;
      fit.iterations = k;
    }
    if (step < tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

double pfa_predict_logit(const PfaCoef& c, double wins, double fails) {
  return c.beta + c.gamma * wins + c.rho * fails;
}

double pfa_predict(const PfaCoef& c, double wins, double fails) {
  return sigma(pfa_predict_logit(c, wins, fails));
}

std::vector<double> PfaModel::predict_sequence(const data::StudentSequence& seq) const {
  std::vector<double> pred;
  pred.reserve(seq.steps.size());
  std::map<std::string, std::pair<double, double>> counts;
  for (const auto& step : seq.steps) {
    auto& [wins, fails] = counts[step.kc_id];
    auto it = params_.per_kc.find(step.kc_id);
    const PfaCoef& c = it != params_.per_kc.end() ? it->second : params_.fallback;
    pred.push_back(pfa_predict(c, wins, fails));
    if (step.correct) {
      wins += 1.0;
    } else {
      fails += 1.0;
    }
  }
  return pred;
}

PfaModel pfa_fit(const std::vector<data::StudentSequence>& sequences) {
  std::vector<PfaFeature> features;
  std::vector<std::uint8_t> labels;
  pfa_featurize(sequences, features, labels);
  if (features.empty()) throw std::invalid_argument("pfa_fit: no interactions");

  std::map<std::string, std::vector<std::size_t>> rows_by_kc;
  for (std::size_t i = 0; i < features.size(); ++i) rows_by_kc[features[i].kc_id].push_back(i);

  PfaParams params;
  for (const auto& [kc, rows] : rows_by_kc) {
    std::vector<PfaFeature> fx;
    std::vector<std::uint8_t> ly;
    fx.reserve(rows.size());
    ly.reserve(rows.size());
    for (std::size_t i : rows) {
      fx.push_back(features[i]);
      ly.push_back(labels[i]);
    }
    PfaFit fit = pfa_fit_one(fx, ly);
    params.per_kc[kc] = fit.coef;
    if (fit.clamped) params.warnings.push_back("separation clamp on KC " + kc);
    if (!fit.converged && fit.iterations == kPfaMaxIter) {
      params.warnings.push_back("no convergence on KC " + kc + "; kept best iterate");
    }
  }
  PfaFit pooled = pfa_fit_one(features, labels);
  params.fallback = pooled.coef;
  if (pooled.clamped) params.warnings.push_back("separation clamp on pooled fallback");
  return PfaModel(std::move(params));
}

nlohmann::json PfaModel::to_json() const {
  auto entry = [](const PfaCoef& c) {
    return nlohmann::json{{"beta", c.beta}, {"gamma", c.gamma}, {"rho", c.rho}};
  };
  nlohmann::json kcs = nlohmann::json::object();
  for (const auto& [id, c] : params_.per_kc) kcs[id] = entry(c);
  return {{"family", "PFA"},
          {"kcs", kcs},
          {"fallback", entry(params_.fallback)},
          {"warnings", params_.warnings}};
}

PfaModel PfaModel::from_json(const nlohmann::json& j) {
  if (j.at("family") != "PFA") throw std::runtime_error("PfaModel: wrong family in JSON");
  auto entry = [](const nlohmann::json& e) {
    PfaCoef c;
    c.beta = e.at("beta");
    c.gamma = e.at("gamma");
    c.rho = e.at("rho");
    return c;
  };
  PfaParams params;
  for (const auto& [id, e] : j.at("kcs").items()) params.per_kc[id] = entry(e);
  params.fallback = entry(j.at("fallback"));
  if (j.contains("warnings")) params.warnings = j.at("warnings").get<std::vector<std::string>>();
  return PfaModel(std::move(params));
}

}  // namespace kt::models
