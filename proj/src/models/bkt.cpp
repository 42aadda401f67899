#include "kt/models/bkt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace kt::models {

namespace {

double clamp_prob(double p) { return std::clamp(p, kBktParamMin, 1.0 - kBktParamMin); }

BktKcParams clamp_params(BktKcParams p) {
  p.L0 = clamp_prob(p.L0);
  p.T = clamp_prob(p.T);
  p.G = clamp_prob(p.G);
  p.S = clamp_prob(p.S);
  p.F = clamp_prob(p.F);
  return p;
}

// Accumulated expected counts from one forward-backward sweep.
struct EStep {
  double ll = 0.0;
  double init_mastered = 0.0;  // sum over sequences of gamma_1(m)
  double n_sequences = 0.0;
  double from_u = 0.0, u_to_m = 0.0;  // transition posteriors, t < T
  double from_m = 0.0, m_to_u = 0.0;
  double occ_u = 0.0, occ_u_correct = 0.0;  // emission posteriors, all t
  double occ_m = 0.0, occ_m_wrong = 0.0;
};

// States: 0 = unmastered, 1 = mastered.
EStep forward_backward(const std::vector<std::vector<std::uint8_t>>& sequences,
                       const BktKcParams& p) {
  EStep e;
  const double a[2][2] = {{1.0 - p.T, p.T}, {p.F, 1.0 - p.F}};
  auto emit = [&](int state, std::uint8_t obs) {
    if (state == 1) return obs ? 1.0 - p.S : p.S;
    return obs ? p.G : 1.0 - p.G;
  };

  std::vector<double> alpha, beta, scale;
  for (const auto& obs : sequences) {
    std::size_t n = obs.size();
    if (n == 0) continue;
    e.n_sequences += 1.0;
    alpha.assign(2 * n, 0.0);
    beta.assign(2 * n, 0.0);
    scale.assign(n, 0.0);

    alpha[0] = (1.0 - p.L0) * emit(0, obs[0]);
    alpha[1] = p.L0 * emit(1, obs[0]);
    scale[0] = alpha[0] + alpha[1];
    alpha[0] /= scale[0];
    alpha[1] /= scale[0];
    for (std::size_t t = 1; t < n; ++t) {
      for (int j = 0; j < 2; ++j) {
        alpha[2 * t + j] =
            emit(j, obs[t]) * (alpha[2 * (t - 1)] * a[0][j] + alpha[2 * (t - 1) + 1] * a[1][j]);
      }
      scale[t] = alpha[2 * t] + alpha[2 * t + 1];
      alpha[2 * t] /= scale[t];
      alpha[2 * t + 1] /= scale[t];
    }
    for (std::size_t t = 0; t < n; ++t) e.ll += std::log(scale[t]);

    beta[2 * (n - 1)] = 1.0;
    beta[2 * (n - 1) + 1] = 1.0;
    for (std::size_t t = n - 1; t-- > 0;) {
      for (int i = 0; i < 2; ++i) {
        beta[2 * t + i] = (a[i][0] * emit(0, obs[t + 1]) * beta[2 * (t + 1)] +
                           a[i][1] * emit(1, obs[t + 1]) * beta[2 * (t + 1) + 1]) /
                          scale[t + 1];
      }
    }

    for (std::size_t t = 0; t < n; ++t) {
      double gu = alpha[2 * t] * beta[2 * t];
      double gm = alpha[2 * t + 1] * beta[2 * t + 1];
      if (t == 0) e.init_mastered += gm;
      e.occ_u += gu;
      e.occ_m += gm;
      if (obs[t]) {
        e.occ_u_correct += gu;
      } else {
        e.occ_m_wrong += gm;
      }
      if (t + 1 < n) {
        e.from_u += gu;
        e.from_m += gm;
        double xi_um =
            alpha[2 * t] * a[0][1] * emit(1, obs[t + 1]) * beta[2 * (t + 1) + 1] / scale[t + 1];
        double xi_mu =
            alpha[2 * t + 1] * a[1][0] * emit(0, obs[t + 1]) * beta[2 * (t + 1)] / scale[t + 1];
        e.u_to_m += xi_um;
        e.m_to_u += xi_mu;
      }
    }
  }
  return e;
}

BktKcParams m_step(const EStep& e, const BktKcParams& prev) {
  BktKcParams p = prev;
  p.L0 = e.init_mastered / e.n_sequences;
  if (e.from_u > 0.0) p.T = e.u_to_m / e.from_u;
  if (e.from_m > 0.0) p.F = e.m_to_u / e.from_m;
  if (e.occ_u > 0.0) p.G = e.occ_u_correct / e.occ_u;
  if (e.occ_m > 0.0) p.S = e.occ_m_wrong / e.occ_m;
  return clamp_params(p);
}

}  // namespace

BktFitResult bkt_fit_kc(const std::vector<std::vector<std::uint8_t>>& sequences,
                        const BktKcParams& init, double tol, int max_iter) {
  bool any = false;
  for (const auto& s : sequences) any = any || !s.empty();
  if (!any) throw std::invalid_argument("bkt_fit_kc: no observations");

  BktFitResult r;
  r.params = clamp_params(init);
  EStep e = forward_backward(sequences, r.params);
  r.log_likelihood = e.ll;
  r.ll_trace.push_back(e.ll);
  for (int k = 1; k <= max_iter; ++k) {
    BktKcParams cand = m_step(e, r.params);
    EStep e2 = forward_backward(sequences, cand);
    r.ll_trace.push_back(e2.ll);
    if (e2.ll - r.log_likelihood < tol) break;  // gain too small: keep current params
    r.params = cand;
    r.log_likelihood = e2.ll;
    r.iterations = k;
    e = e2;
  }
  return r;
}

std::vector<double> bkt_predict(const BktKcParams& p, const std::vector<std::uint8_t>& responses) {
  std::vector<double> pred;
  pred.reserve(responses.size());
  double L = p.L0;
  for (std::uint8_t obs : responses) {
    double pc = L * (1.0 - p.S) + (1.0 - L) * p.G;
    pred.push_back(pc);
    double post = obs ? L * (1.0 - p.S) / pc : L * p.S / (1.0 - pc);
    L = post * (1.0 - p.F) + (1.0 - post) * p.T;
  }
  return pred;
}

BktKcParams bkt_fallback(const BktParams& params) {
  if (params.per_kc.empty()) throw std::invalid_argument("bkt_fallback: no fitted KCs");
  BktKcParams mean{0, 0, 0, 0, 0};
  for (const auto& [id, p] : params.per_kc) {
    mean.L0 += p.L0;
    mean.T += p.T;
    mean.G += p.G;
    mean.S += p.S;
    mean.F += p.F;
  }
  double n = double(params.per_kc.size());
  mean.L0 /= n;
  mean.T /= n;
  mean.G /= n;
  mean.S /= n;
  mean.F /= n;
  return mean;
}

std::vector<double> BktModel::predict_sequence(const data::StudentSequence& seq) const {
  std::vector<double> pred;
  pred.reserve(seq.steps.size());
  std::map<std::string, double> mastery;  // current L per KC
  for (const auto& step : seq.steps) {
    auto it = params_.per_kc.find(step.kc_id);
    const BktKcParams& p = it != params_.per_kc.end() ? it->second : params_.fallback;
    auto [state, inserted] = mastery.try_emplace(step.kc_id, p.L0);
    double L = state->second;
    double pc = L * (1.0 - p.S) + (1.0 - L) * p.G;
    pred.push_back(pc);
    double post = step.correct ? L * (1.0 - p.S) / pc : L * p.S / (1.0 - pc);
    state->second = post * (1.0 - p.F) + (1.0 - post) * p.T;
  }
  return pred;
}

BktModel bkt_fit(const std::vector<data::StudentSequence>& sequences, std::size_t workers) {
  // Per-KC response sequences, one per (student, KC) with >= 1 step.
  std::map<std::string, std::vector<std::vector<std::uint8_t>>> by_kc;
  for (const auto& seq : sequences) {
    std::map<std::string, std::size_t> slot;
    for (const auto& step : seq.steps) {
      auto [it, inserted] = slot.try_emplace(step.kc_id, 0);
      if (inserted) {
        auto& list = by_kc[step.kc_id];
        it->second = list.size();
        list.emplace_back();
      }
      by_kc[step.kc_id][it->second].push_back(step.correct);
    }
  }
  if (by_kc.empty()) throw std::invalid_argument("bkt_fit: no interactions");

  std::vector<const std::string*> keys;
  keys.reserve(by_kc.size());
  for (const auto& [id, obs] : by_kc) keys.push_back(&id);

  BktParams params;
  std::vector<BktFitResult> results(keys.size());
  auto fit_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) results[i] = bkt_fit_kc(by_kc.at(*keys[i]));
  };
  if (workers <= 1 || keys.size() < 2) {
    fit_range(0, keys.size());
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < keys.size(); i = next.fetch_add(1)) {
        results[i] = bkt_fit_kc(by_kc.at(*keys[i]));
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, keys.size()); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    params.per_kc[*keys[i]] = results[i].params;
    params.fit_info[*keys[i]] = std::move(results[i]);
  }
  params.fallback = bkt_fallback(params);
  return BktModel(std::move(params));
}

nlohmann::json BktModel::to_json() const {
  auto entry = [](const BktKcParams& p) {
    return nlohmann::json{{"L0", p.L0}, {"T", p.T}, {"G", p.G}, {"S", p.S}, {"F", p.F}};
  };
  nlohmann::json kcs = nlohmann::json::object();
  nlohmann::json fit = nlohmann::json::object();
  for (const auto& [id, p] : params_.per_kc) kcs[id] = entry(p);
  for (const auto& [id, r] : params_.fit_info) {
    fit[id] = {{"iterations", r.iterations}, {"log_likelihood", r.log_likelihood}};
  }
  return {{"family", "BKT"},
          {"kcs", kcs},
          {"fallback", entry(params_.fallback)},
          {"fit", fit},
          {"warnings", params_.warnings}};
}

BktModel BktModel::from_json(const nlohmann::json& j) {
  if (j.at("family") != "BKT") throw std::runtime_error("BktModel: wrong family in JSON");
  auto entry = [](const nlohmann::json& e) {
    BktKcParams p;
    p.L0 = e.at("L0");
    p.T = e.at("T");
    p.G = e.at("G");
    p.S = e.at("S");
    p.F = e.at("F");
    return p;
  };
  BktParams params;
  for (const auto& [id, e] : j.at("kcs").items()) params.per_kc[id] = entry(e);
  params.fallback = entry(j.at("fallback"));
  if (j.contains("warnings")) params.warnings = j.at("warnings").get<std::vector<std::string>>();
  return BktModel(std::move(params));
}

}  // namespace kt::models
