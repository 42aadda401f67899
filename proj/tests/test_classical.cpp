#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "kt/models/bkt.hpp"
#include "kt/models/model_io.hpp"
#include "kt/models/pfa.hpp"
#include "kt/rng.hpp"
#include "kt/synth/synth.hpp"

using namespace kt;
using models::BktKcParams;
using models::PfaCoef;

namespace {

data::StudentSequence make_sequence(const std::string& student,
                                    const std::vector<std::pair<std::string, int>>& steps) {
  data::StudentSequence seq;
  seq.student_id = student;
  UtcSeconds t = 1000;
  for (const auto& [kc, correct] : steps) {
    data::SequenceStep s;
    s.kc_id = kc;
    s.exercise_id = "e_" + kc;
    s.correct = std::uint8_t(correct);
    s.timestamp = t;
    t += 60;
    seq.steps.push_back(s);
  }
  return seq;
}

// Groups single-KC synthetic rows into per-student response vectors.
std::vector<std::vector<std::uint8_t>> responses_by_student(const data::LogStore& store) {
  std::vector<std::vector<std::uint8_t>> out;
  std::string current;
  for (const auto& r : store.rows) {
    if (r.student_id != current) {
      current = r.student_id;
      out.emplace_back();
    }
    out.back().push_back(r.correct);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// BKT

TEST_CASE("bkt_predict: hand-evaluated two-step recurrence") {
  BktKcParams p{0.5, 0.0, 0.2, 0.1, 0.0};  // L0, T, G, S, F
  auto pred = models::bkt_predict(p, {1, 1});
  REQUIRE(pred.size() == 2);
  CHECK(pred[0] == doctest::Approx(0.55).epsilon(1e-12));
  // posterior after a correct step: 0.45/0.55 = 9/11; no transition, so the
  // second emission is (9/11)*0.9 + (2/11)*0.2 = 17/22.
  CHECK(pred[1] == doctest::Approx(17.0 / 22.0).epsilon(1e-12));
}

TEST_CASE("bkt_predict: incorrect observation lowers the next prediction") {
  BktKcParams p{0.5, 0.0, 0.2, 0.1, 0.0};
  auto pred = models::bkt_predict(p, {0, 0});
  CHECK(pred[0] == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(pred[1] < 0.55);
}

TEST_CASE("bkt_predict: forced mastery emits certainty") {
  BktKcParams p{1.0, 0.2, 0.2, 0.0, 0.05};
  auto pred = models::bkt_predict(p, {1});
  CHECK(pred[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bkt_predict: all-correct with learning and no forgetting is monotone") {
  BktKcParams p{0.3, 0.25, 0.15, 0.1, 0.0};
  std::vector<std::uint8_t> obs(12, 1);
  auto pred = models::bkt_predict(p, obs);
  for (std::size_t i = 1; i < pred.size(); ++i) CHECK(pred[i] >= pred[i - 1]);
  for (double v : pred) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("bkt_fit_kc: all-correct data explains near-certain correctness") {
  std::vector<std::vector<std::uint8_t>> seqs(50, std::vector<std::uint8_t>(10, 1));
  auto fit = models::bkt_fit_kc(seqs);
  const auto& p = fit.params;
  double first = p.L0 * (1 - p.S) + (1 - p.L0) * p.G;
  CHECK(first >= 0.95);
}

TEST_CASE("bkt_fit_kc: log-likelihood trace is non-decreasing") {
  Rng rng(31);
  std::vector<std::vector<std::uint8_t>> seqs;
  for (int s = 0; s < 200; ++s) {
    std::vector<std::uint8_t> obs;
    bool mastered = rng.bernoulli(0.3);
    for (int t = 0; t < 15; ++t) {
      obs.push_back(rng.bernoulli(mastered ? 0.9 : 0.2) ? 1 : 0);
      if (!mastered) mastered = rng.bernoulli(0.2);
    }
    seqs.push_back(std::move(obs));
  }
  auto fit = models::bkt_fit_kc(seqs);
  REQUIRE(fit.ll_trace.size() >= 1);
  for (std::size_t i = 1; i < fit.ll_trace.size(); ++i)
    CHECK(fit.ll_trace[i] >= fit.ll_trace[i - 1] - 1e-9);
  // The trace logs every evaluation, including a final rejected candidate;
  // the reported likelihood belongs to the last accepted update.
  REQUIRE(fit.ll_trace.size() > std::size_t(fit.iterations));
  CHECK(fit.log_likelihood == fit.ll_trace[std::size_t(fit.iterations)]);
}

TEST_CASE("bkt_fit_kc: infinite tolerance returns the init untouched") {
  std::vector<std::vector<std::uint8_t>> seqs{{1, 0, 1}, {0, 1}};
  auto fit = models::bkt_fit_kc(seqs, models::kBktInit, std::numeric_limits<double>::infinity());
  CHECK(fit.iterations == 0);
  CHECK(fit.params.L0 == models::kBktInit.L0);
  CHECK(fit.params.T == models::kBktInit.T);
  CHECK(fit.params.G == models::kBktInit.G);
  CHECK(fit.params.S == models::kBktInit.S);
  CHECK(fit.params.F == models::kBktInit.F);
  CHECK(fit.log_likelihood < 0.0);
  CHECK(std::isfinite(fit.log_likelihood));
}

TEST_CASE("bkt_fit_kc: empty observation set throws") {
  CHECK_THROWS(models::bkt_fit_kc({}));
  CHECK_THROWS(models::bkt_fit_kc({{}, {}}));
}

TEST_CASE("bkt_fit_kc: parameters stay inside the clamp box") {
  std::vector<std::vector<std::uint8_t>> seqs(30, std::vector<std::uint8_t>(8, 1));
  auto fit = models::bkt_fit_kc(seqs);
  for (double v : {fit.params.L0, fit.params.T, fit.params.G, fit.params.S, fit.params.F}) {
    CHECK(v >= models::kBktParamMin);
    CHECK(v <= 1.0 - models::kBktParamMin);
  }
}

TEST_CASE("bkt_fit_kc: recovers generating parameters from synthetic data") {
  synth::SynthConfig cfg;
  cfg.n_students = 5000;
  cfg.n_kcs = 1;
  cfg.steps_per_student_per_kc = 20;
  synth::KcTruth truth{0.3, 0.2, 0.15, 0.1, 0.05};
  cfg.truths["kc000"] = truth;
  cfg.seed = 404;
  synth::SynthYear year = synth::simulate_year(cfg, 0);
  auto seqs = responses_by_student(year.store);
  REQUIRE(seqs.size() == 5000);

  auto fit = models::bkt_fit_kc(seqs);
  CHECK(std::abs(fit.params.L0 - truth.L0) < 0.05);
  CHECK(std::abs(fit.params.T - truth.T) < 0.05);
  CHECK(std::abs(fit.params.G - truth.G) < 0.05);
  CHECK(std::abs(fit.params.S - truth.S) < 0.05);
  CHECK(std::abs(fit.params.F - truth.F) < 0.05);
  for (std::size_t i = 1; i < fit.ll_trace.size(); ++i)
    CHECK(fit.ll_trace[i] >= fit.ll_trace[i - 1] - 1e-9);
}

TEST_CASE("bkt_fallback: arithmetic mean over fitted KCs") {
  models::BktParams params;
  params.per_kc["k1"] = BktKcParams{0.4, 0.1, 0.1, 0.1, 0.02};
  SUBCASE("singleton") {
    auto fb = models::bkt_fallback(params);
    CHECK(fb.L0 == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(fb.G == doctest::Approx(0.1).epsilon(1e-15));
  }
  SUBCASE("two KCs average componentwise") {
    params.per_kc["k2"] = BktKcParams{0.6, 0.3, 0.3, 0.2, 0.04};
    auto fb = models::bkt_fallback(params);
    CHECK(fb.L0 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(fb.T == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(fb.G == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(fb.S == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(fb.F == doctest::Approx(0.03).epsilon(1e-15));
  }
  SUBCASE("empty throws") {
    models::BktParams none;
    CHECK_THROWS(models::bkt_fallback(none));
  }
}

TEST_CASE("BktModel: unseen KC routes to the fallback parameters") {
  models::BktParams params;
  params.per_kc["known"] = BktKcParams{0.9, 0.1, 0.05, 0.05, 0.01};
  params.fallback = BktKcParams{0.5, 0.0, 0.2, 0.1, 0.0};
  models::BktModel model(params);

  auto seq = make_sequence("s1", {{"mystery", 1}, {"mystery", 1}});
  auto pred = model.predict_sequence(seq);
  auto direct = models::bkt_predict(params.fallback, {1, 1});
  REQUIRE(pred.size() == 2);
  CHECK(pred[0] == doctest::Approx(direct[0]).epsilon(1e-15));
  CHECK(pred[1] == doctest::Approx(direct[1]).epsilon(1e-15));
}

TEST_CASE("BktModel: interleaved KCs keep independent mastery beliefs") {
  models::BktParams params;
  params.per_kc["a"] = BktKcParams{0.3, 0.2, 0.15, 0.1, 0.0};
  params.per_kc["b"] = BktKcParams{0.7, 0.1, 0.25, 0.05, 0.0};
  params.fallback = models::kBktInit;
  models::BktModel model(params);

  auto seq = make_sequence("s1", {{"a", 1}, {"b", 0}, {"a", 1}, {"b", 1}, {"a", 0}});
  auto pred = model.predict_sequence(seq);
  auto only_a = models::bkt_predict(params.per_kc["a"], {1, 1, 0});
  auto only_b = models::bkt_predict(params.per_kc["b"], {0, 1});
  REQUIRE(pred.size() == 5);
  CHECK(pred[0] == doctest::Approx(only_a[0]).epsilon(1e-15));
  CHECK(pred[1] == doctest::Approx(only_b[0]).epsilon(1e-15));
  CHECK(pred[2] == doctest::Approx(only_a[1]).epsilon(1e-15));
  CHECK(pred[3] == doctest::Approx(only_b[1]).epsilon(1e-15));
  CHECK(pred[4] == doctest::Approx(only_a[2]).epsilon(1e-15));
}

TEST_CASE("bkt_fit: model fits every KC present and counts parameters") {
  Rng rng(77);
  std::vector<data::StudentSequence> seqs;
  for (int s = 0; s < 40; ++s) {
    std::vector<std::pair<std::string, int>> steps;
    for (int t = 0; t < 6; ++t)
      steps.push_back({t % 2 == 0 ? "k1" : "k2", rng.bernoulli(0.6) ? 1 : 0});
    seqs.push_back(make_sequence("s" + std::to_string(s), steps));
  }
  models::BktModel model = models::bkt_fit(seqs);
  CHECK(model.params().per_kc.size() == 2);
  CHECK(model.count_params() == 5 * 2 + 5);
  CHECK(model.family() == models::Family::Bkt);

  auto pred = model.predict_sequence(seqs[0]);
  REQUIRE(pred.size() == 6);
  for (double p : pred) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("bkt_fit: worker count does not change the fit") {
  Rng rng(78);
  std::vector<data::StudentSequence> seqs;
  for (int s = 0; s < 30; ++s) {
    std::vector<std::pair<std::string, int>> steps;
    for (int t = 0; t < 8; ++t)
      steps.push_back({"k" + std::to_string(t % 3), rng.bernoulli(0.5) ? 1 : 0});
    seqs.push_back(make_sequence("s" + std::to_string(s), steps));
  }
  models::BktModel one = models::bkt_fit(seqs, 1);
  models::BktModel four = models::bkt_fit(seqs, 4);
  REQUIRE(one.params().per_kc.size() == four.params().per_kc.size());
  for (const auto& [kc, p] : one.params().per_kc) {
    const auto& q = four.params().per_kc.at(kc);
    CHECK(p.L0 == q.L0);
    CHECK(p.T == q.T);
    CHECK(p.G == q.G);
    CHECK(p.S == q.S);
    CHECK(p.F == q.F);
  }
}

TEST_CASE("BktModel: json round trip preserves every parameter") {
  models::BktParams params;
  params.per_kc["k1"] = BktKcParams{0.31, 0.21, 0.17, 0.093, 0.011};
  params.per_kc["k2"] = BktKcParams{0.62, 0.12, 0.26, 0.041, 0.002};
  params.fallback = models::bkt_fallback(params);
  models::BktModel model(params);

  auto j = nlohmann::json::parse(model.to_json().dump());
  models::BktModel back = models::BktModel::from_json(j);
  REQUIRE(back.params().per_kc.size() == 2);
  for (const auto& [kc, p] : params.per_kc) {
    const auto& q = back.params().per_kc.at(kc);
    CHECK(q.L0 == p.L0);
    CHECK(q.T == p.T);
    CHECK(q.G == p.G);
    CHECK(q.S == p.S);
    CHECK(q.F == p.F);
  }
  CHECK(back.params().fallback.L0 == params.fallback.L0);
}

TEST_CASE("save_model/load_model: classical file round trip") {
  models::BktParams params;
  params.per_kc["k1"] = BktKcParams{0.31, 0.21, 0.17, 0.093, 0.011};
  params.fallback = params.per_kc["k1"];
  models::BktModel model(params);
  auto path = (std::filesystem::temp_directory_path() / "kt_bkt_model.json").string();
  models::save_model(path, model);
  models::ModelPtr loaded = models::load_model(path);
  REQUIRE(loaded);
  CHECK(loaded->family() == models::Family::Bkt);
  CHECK(loaded->count_params() == model.count_params());
  auto seq = make_sequence("s1", {{"k1", 1}, {"k1", 0}, {"k9", 1}});
  auto a = model.predict_sequence(seq);
  auto b = loaded->predict_sequence(seq);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------
// PFA

TEST_CASE("pfa_featurize: strictly prior counts, reset per student and KC") {
  std::vector<data::StudentSequence> seqs;
  seqs.push_back(make_sequence("s1", {{"a", 1}, {"a", 1}, {"a", 0}, {"a", 1}}));
  seqs.push_back(make_sequence("s2", {{"a", 0}, {"b", 1}, {"a", 1}, {"b", 0}}));
  std::vector<models::PfaFeature> features;
  std::vector<std::uint8_t> labels;
  models::pfa_featurize(seqs, features, labels);
  REQUIRE(features.size() == 8);
  REQUIRE(labels.size() == 8);

  // s1 on KC a: history correct, correct, wrong → step 4 sees s=2, f=1.
  CHECK(features[0].wins == 0);
  CHECK(features[0].fails == 0);
  CHECK(features[1].wins == 1);
  CHECK(features[2].wins == 2);
  CHECK(features[2].fails == 0);
  CHECK(features[3].wins == 2);
  CHECK(features[3].fails == 1);
  CHECK(labels[3] == 1);

  // s2 interleaves KCs; counts stay independent and reset from s1.
  CHECK(features[4].kc_id == "a");
  CHECK(features[4].wins == 0);
  CHECK(features[4].fails == 0);
  CHECK(features[5].kc_id == "b");
  CHECK(features[5].wins == 0);
  CHECK(features[6].kc_id == "a");
  CHECK(features[6].fails == 1);  // the earlier miss on a
  CHECK(features[6].wins == 0);
  CHECK(features[7].kc_id == "b");
  CHECK(features[7].wins == 1);
  CHECK(features[7].fails == 0);
}

TEST_CASE("pfa_featurize: win+fail counts equal prior interactions on the KC") {
  Rng rng(5);
  std::vector<std::pair<std::string, int>> steps;
  for (int t = 0; t < 30; ++t)
    steps.push_back({"k" + std::to_string(t % 3), rng.bernoulli(0.5) ? 1 : 0});
  std::vector<data::StudentSequence> seqs{make_sequence("s1", steps)};
  std::vector<models::PfaFeature> features;
  std::vector<std::uint8_t> labels;
  models::pfa_featurize(seqs, features, labels);
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < features.size(); ++i) {
    CHECK(features[i].wins + features[i].fails == seen[features[i].kc_id]);
    seen[features[i].kc_id] += 1;
  }
}

TEST_CASE("pfa_predict: zero coefficients and analytic logits") {
  PfaCoef zero;
  CHECK(models::pfa_predict(zero, 0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(models::pfa_predict(zero, 7, 3) == doctest::Approx(0.5).epsilon(1e-15));

  PfaCoef unit{1.0, 0.0, 0.0};
  CHECK(models::pfa_predict(unit, 0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));

  PfaCoef c{-0.2, 0.3, -0.1};
  CHECK(models::pfa_predict_logit(c, 5, 2) - models::pfa_predict_logit(c, 3, 2) ==
        doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("pfa_fit_one: zero iteration budget returns the zero init") {
  std::vector<models::PfaFeature> features{{"k", 0, 0}, {"k", 1, 0}};
  std::vector<std::uint8_t> labels{1, 0};
  auto fit = models::pfa_fit_one(features, labels, 0);
  CHECK(fit.coef.beta == 0.0);
  CHECK(fit.coef.gamma == 0.0);
  CHECK(fit.coef.rho == 0.0);
  CHECK(fit.iterations == 0);
  CHECK(models::pfa_predict(fit.coef, 3, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("pfa_fit_one: complete separation clamps and flags") {
  std::vector<models::PfaFeature> features(40, models::PfaFeature{"k", 0, 0});
  std::vector<std::uint8_t> labels(40, 1);
  auto fit = models::pfa_fit_one(features, labels);
  CHECK(fit.clamped);
  CHECK(std::abs(fit.coef.beta) <= models::kPfaCoefClamp);
  CHECK(fit.coef.beta == doctest::Approx(models::kPfaCoefClamp).epsilon(1e-12));
}

TEST_CASE("pfa_fit_one: empty input throws") {
  std::vector<models::PfaFeature> none;
  std::vector<std::uint8_t> labels;
  CHECK_THROWS(models::pfa_fit_one(none, labels));
}

TEST_CASE("pfa_fit_one: recovers generating coefficients") {
  PfaCoef truth{-0.5, 0.3, -0.2};
  Rng rng(909);
  std::vector<models::PfaFeature> features;
  std::vector<std::uint8_t> labels;
  features.reserve(50000);
  for (int i = 0; i < 50000; ++i) {
    double wins = double(rng.next_below(11));
    double fails = double(rng.next_below(11));
    double p = models::pfa_predict(truth, wins, fails);
    features.push_back({"k", wins, fails});
    labels.push_back(rng.bernoulli(p) ? 1 : 0);
  }
  auto fit = models::pfa_fit_one(features, labels);
  CHECK(fit.converged);
  CHECK(std::abs(fit.coef.beta - truth.beta) < 0.05);
  CHECK(std::abs(fit.coef.gamma - truth.gamma) < 0.05);
  CHECK(std::abs(fit.coef.rho - truth.rho) < 0.05);
}

TEST_CASE("pfa_fit_one: example order does not move the optimum") {
  Rng rng(31);
  std::vector<models::PfaFeature> features;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 500; ++i) {
    double wins = double(rng.next_below(6));
    double fails = double(rng.next_below(6));
    features.push_back({"k", wins, fails});
    labels.push_back(rng.bernoulli(models::pfa_predict({0.2, 0.25, -0.3}, wins, fails)) ? 1 : 0);
  }
  auto fit = models::pfa_fit_one(features, labels);
  std::reverse(features.begin(), features.end());
  std::reverse(labels.begin(), labels.end());
  auto rev = models::pfa_fit_one(features, labels);
  CHECK(rev.coef.beta == doctest::Approx(fit.coef.beta).epsilon(1e-9));
  CHECK(rev.coef.gamma == doctest::Approx(fit.coef.gamma).epsilon(1e-9));
  CHECK(rev.coef.rho == doctest::Approx(fit.coef.rho).epsilon(1e-9));
}

TEST_CASE("pfa_fit: per-KC coefficients plus pooled fallback") {
  Rng rng(55);
  std::vector<data::StudentSequence> seqs;
  for (int s = 0; s < 80; ++s) {
    std::vector<std::pair<std::string, int>> steps;
    for (int t = 0; t < 10; ++t) {
      std::string kc = t % 2 == 0 ? "easy" : "hard";
      double p = kc == "easy" ? 0.8 : 0.3;
      steps.push_back({kc, rng.bernoulli(p) ? 1 : 0});
    }
    seqs.push_back(make_sequence("s" + std::to_string(s), steps));
  }
  models::PfaModel model = models::pfa_fit(seqs);
  REQUIRE(model.params().per_kc.size() == 2);
  CHECK(model.count_params() == 3 * 2 + 3);
  CHECK(model.family() == models::Family::Pfa);
  // The easy KC should carry the larger intercept.
  CHECK(model.params().per_kc.at("easy").beta > model.params().per_kc.at("hard").beta);
}

TEST_CASE("PfaModel: prediction tracks within-sequence counts and routes OOV") {
  models::PfaParams params;
  params.per_kc["a"] = PfaCoef{0.1, 0.4, -0.3};
  params.fallback = PfaCoef{-0.7, 0.0, 0.0};
  models::PfaModel model(params);

  auto seq = make_sequence("s1", {{"a", 1}, {"a", 0}, {"a", 1}, {"zz", 1}, {"zz", 0}});
  auto pred = model.predict_sequence(seq);
  REQUIRE(pred.size() == 5);
  CHECK(pred[0] == doctest::Approx(models::pfa_predict(params.per_kc["a"], 0, 0)).epsilon(1e-15));
  CHECK(pred[1] == doctest::Approx(models::pfa_predict(params.per_kc["a"], 1, 0)).epsilon(1e-15));
  CHECK(pred[2] == doctest::Approx(models::pfa_predict(params.per_kc["a"], 1, 1)).epsilon(1e-15));
  // unseen KC: fallback coefficients with that KC's own (fresh) counts
  CHECK(pred[3] == doctest::Approx(models::pfa_predict(params.fallback, 0, 0)).epsilon(1e-15));
  CHECK(pred[4] == doctest::Approx(models::pfa_predict(params.fallback, 1, 0)).epsilon(1e-15));
}

TEST_CASE("PfaModel: json round trip preserves coefficients and warnings") {
  models::PfaParams params;
  params.per_kc["k1"] = PfaCoef{-0.25, 0.31, -0.17};
  params.per_kc["k2"] = PfaCoef{0.4, 0.05, -0.6};
  params.fallback = PfaCoef{0.01, 0.02, 0.03};
  params.warnings.push_back("k2: separation clamp engaged");
  models::PfaModel model(params);

  auto back = models::PfaModel::from_json(nlohmann::json::parse(model.to_json().dump()));
  REQUIRE(back.params().per_kc.size() == 2);
  for (const auto& [kc, c] : params.per_kc) {
    const auto& d = back.params().per_kc.at(kc);
    CHECK(d.beta == c.beta);
    CHECK(d.gamma == c.gamma);
    CHECK(d.rho == c.rho);
  }
  CHECK(back.params().fallback.beta == params.fallback.beta);
  REQUIRE(back.params().warnings.size() == 1);
  CHECK(back.params().warnings[0] == params.warnings[0]);
}
