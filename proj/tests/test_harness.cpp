#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kt/data/sample.hpp"
#include "kt/data/sequences.hpp"
#include "kt/harness/protocol.hpp"
#include "kt/harness/records.hpp"
#include "kt/harness/report.hpp"
#include "kt/harness/tuner.hpp"
#include "kt/metrics/classify.hpp"
#include "kt/models/bkt.hpp"
#include "kt/rng.hpp"
#include "kt/synth/synth.hpp"

using namespace kt;
using harness::EvalRecord;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EvalRecord rec(const std::string& family, const std::string& ty, const std::string& ey, int ts,
               int es, double auc) {
  EvalRecord r;
  r.family = family;
  r.train_year = ty;
  r.eval_year = ey;
  r.years_between = harness::year_start(ey) - harness::year_start(ty);
  r.train_sample = ts;
  r.eval_sample = es;
  r.auc = auc;
  r.log_loss = 0.5 - auc / 4;
  r.f1 = auc * 0.9;
  r.n_interactions = 1000;
  return r;
}

// Two drifting synthetic years, each holding enough assignment logs for a
// handful of disjoint samples.
std::vector<harness::YearData> tiny_years(std::size_t n_years, std::size_t samples_per_year,
                                          std::size_t sample_size) {
  synth::SynthConfig cfg;
  cfg.n_students = 60;
  cfg.n_kcs = 3;
  cfg.steps_per_student_per_kc = 6;
  cfg.truths = synth::spread_truths(3, 15);
  cfg.drift.dG = 0.04;
  cfg.drift.dS = 0.03;
  cfg.seed = 500;

  std::vector<harness::YearData> years;
  for (std::size_t y = 0; y < n_years; ++y) {
    synth::SynthYear sy = synth::simulate_year(cfg, y);
    harness::YearData yd;
    yd.year_label = sy.store.year_label;
    yd.samples = data::sample_assignment_logs(sy.store, samples_per_year, sample_size, 77 + y);
    years.push_back(std::move(yd));
  }
  return years;
}

}  // namespace

// ---------------------------------------------------------------------------
// Records

TEST_CASE("year_start: leading calendar year of the label") {
  CHECK(harness::year_start("2019-2020") == 2019);
  CHECK(harness::year_start("2022-2023") == 2022);
  CHECK_THROWS(harness::year_start("not-a-year"));
}

TEST_CASE("records csv: exact header and full round trip") {
  std::vector<EvalRecord> records{
      rec("BKT", "2019-2020", "2019-2020", 0, 1, 0.842),
      rec("SAKT-E", "2019-2020", "2021-2022", 3, 0, 0.7211223344556677),
  };
  records[1].n_interactions = 123456;
  auto path = (fs::temp_directory_path() / "kt_records.csv").string();
  harness::write_records_csv(path, records);

  std::string text = slurp(path);
  CHECK(text.rfind("family,train_year,eval_year,years_between,train_sample,eval_sample,"
                   "auc,log_loss,f1,n_interactions\n",
                   0) == 0);

  auto back = harness::read_records_csv(path);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].family == records[i].family);
    CHECK(back[i].train_year == records[i].train_year);
    CHECK(back[i].eval_year == records[i].eval_year);
    CHECK(back[i].years_between == records[i].years_between);
    CHECK(back[i].train_sample == records[i].train_sample);
    CHECK(back[i].eval_sample == records[i].eval_sample);
    CHECK(back[i].auc == records[i].auc);  // bitwise through the file
    CHECK(back[i].log_loss == records[i].log_loss);
    CHECK(back[i].f1 == records[i].f1);
    CHECK(back[i].n_interactions == records[i].n_interactions);
  }

  auto path2 = (fs::temp_directory_path() / "kt_records2.csv").string();
  harness::write_records_csv(path2, back);
  CHECK(slurp(path2) == text);  // byte-identical re-export
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("sort_records: canonical family order then the protocol key") {
  std::vector<EvalRecord> records{
      rec("SAKT-KC", "2019-2020", "2019-2020", 0, 1, 0.5),
      rec("BKT", "2020-2021", "2020-2021", 1, 0, 0.5),
      rec("BKT", "2019-2020", "2020-2021", 0, 0, 0.5),
      rec("BKT", "2019-2020", "2019-2020", 1, 0, 0.5),
      rec("BKT", "2019-2020", "2019-2020", 0, 1, 0.5),
      rec("PFA", "2019-2020", "2019-2020", 0, 1, 0.5),
      rec("DKT", "2019-2020", "2019-2020", 0, 1, 0.5),
      rec("SAKT-E", "2019-2020", "2019-2020", 0, 1, 0.5),
  };
  harness::sort_records(records);
  CHECK(records[0].family == "BKT");
  CHECK(records[1].family == "BKT");
  CHECK(records[2].family == "BKT");
  CHECK(records[3].family == "BKT");
  CHECK(records[4].family == "PFA");
  CHECK(records[5].family == "DKT");
  CHECK(records[6].family == "SAKT-KC");
  CHECK(records[7].family == "SAKT-E");
  // within BKT: train_year, then train_sample, then eval_year, then eval_sample
  CHECK(records[0].train_year == "2019-2020");
  CHECK(records[0].train_sample == 0);
  CHECK(records[0].eval_year == "2019-2020");
  CHECK(records[1].train_sample == 0);
  CHECK(records[1].eval_year == "2020-2021");
  CHECK(records[2].train_sample == 1);
  CHECK(records[3].train_year == "2020-2021");
}

// ---------------------------------------------------------------------------
// Protocol

TEST_CASE("evaluate_model: fields, micro pooling, and the year guard") {
  auto years = tiny_years(2, 2, 20);
  const data::Sample& train = years[0].samples[0];
  const data::Sample& eval = years[0].samples[1];

  data::Vocabulary vocab = data::build_vocabulary(train);
  auto seqs = data::build_sequences(train, vocab);
  models::BktModel model = models::bkt_fit(seqs);

  EvalRecord r = harness::evaluate_model(model, years[0].year_label, 0, eval);
  CHECK(r.family == "BKT");
  CHECK(r.train_year == years[0].year_label);
  CHECK(r.eval_year == years[0].year_label);
  CHECK(r.years_between == 0);
  CHECK(r.train_sample == 0);
  CHECK(r.eval_sample == eval.sample_id);
  CHECK(r.n_interactions == eval.rows.size());
  CHECK(r.auc > 0.0);
  CHECK(r.auc < 1.0);
  CHECK(r.log_loss > 0.0);

  // Micro pooling: the AUC must equal scoring every interaction directly.
  data::Vocabulary eval_vocab = data::build_vocabulary(eval);
  auto eval_seqs = data::build_sequences(eval, eval_vocab);
  metrics::ScoredLabels pooled;
  for (const auto& seq : eval_seqs) {
    auto pred = model.predict_sequence(seq);
    for (std::size_t i = 0; i < seq.steps.size(); ++i)
      pooled.push(seq.steps[i].correct, pred[i]);
  }
  CHECK(r.auc == doctest::Approx(metrics::auc(pooled)).epsilon(1e-12));
  CHECK(r.log_loss == doctest::Approx(metrics::log_loss(pooled)).epsilon(1e-12));
  CHECK(r.f1 == doctest::Approx(metrics::f1_score(pooled)).epsilon(1e-12));

  // Evaluating backwards in time is a protocol violation, not a record.
  data::Sample earlier = eval;
  earlier.year_label = "2015-2016";
  CHECK_THROWS_AS(harness::evaluate_model(model, years[0].year_label, 0, earlier),
                  std::logic_error);
}

TEST_CASE("run_within_year: round robin over sibling samples") {
  auto years = tiny_years(1, 3, 15);
  harness::ModelSpec spec;
  spec.family = models::Family::Bkt;
  spec.seed = 3;

  std::vector<models::ModelPtr> fitted;
  auto records = harness::run_within_year(years[0].samples, spec, false, 1, &fitted);
  CHECK(records.size() == 3 * 2);
  CHECK(fitted.size() == 3);
  std::set<std::pair<int, int>> pairs;
  for (const auto& r : records) {
    CHECK(r.years_between == 0);
    CHECK(r.family == "BKT");
    CHECK(r.train_sample != r.eval_sample);
    pairs.insert({r.train_sample, r.eval_sample});
  }
  CHECK(pairs.size() == 6);  // every ordered pair exactly once
}

TEST_CASE("run_within_year: the published protocol insists on ten samples") {
  auto years = tiny_years(1, 3, 15);
  harness::ModelSpec spec;
  spec.family = models::Family::Pfa;
  CHECK_THROWS_WITH_AS(harness::run_within_year(years[0].samples, spec, true),
                       doctest::Contains("10"), std::invalid_argument);
}

TEST_CASE("run_cross_year: later years reuse the within-year models") {
  auto years = tiny_years(3, 2, 15);
  harness::ModelSpec spec;
  spec.family = models::Family::Bkt;
  spec.seed = 4;

  std::vector<models::ModelPtr> fitted;
  auto within = harness::run_within_year(years[0].samples, spec, false, 1, &fitted);
  std::vector<int> ids;
  for (const auto& s : years[0].samples) ids.push_back(s.sample_id);

  std::vector<harness::YearData> later{years[1], years[2]};
  auto cross = harness::run_cross_year(fitted, ids, years[0].year_label, later);
  CHECK(cross.size() == 2 * 2);  // 2 models x 2 later years
  for (const auto& r : cross) {
    CHECK(r.train_year == years[0].year_label);
    CHECK((r.years_between == 1 || r.years_between == 2));
    // model i pairs with eval sample index i mod n
    CHECK(r.eval_sample ==
          later[std::size_t(r.years_between) - 1].samples[std::size_t(r.train_sample) % 2].sample_id);
  }

  CHECK_THROWS(harness::run_cross_year(fitted, ids, years[0].year_label, {}));
  std::vector<harness::YearData> same{years[0]};
  CHECK_THROWS(harness::run_cross_year(fitted, ids, years[0].year_label, same));
}

TEST_CASE("run_matrix: grid size, ordering, and determinism") {
  auto years = tiny_years(2, 2, 15);
  harness::MatrixConfig config;
  config.families = {models::Family::Bkt, models::Family::Pfa};
  config.seed = 9;
  config.require_ten = false;

  auto records = harness::run_matrix(years, config);
  // per family: 2 years x 2x1 within + 2 cross (year0 models onto year1)
  CHECK(records.size() == 2 * (2 * 2 + 2));

  // sorted by the protocol key
  std::vector<EvalRecord> sorted = records;
  harness::sort_records(sorted);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].family == sorted[i].family);
    CHECK(records[i].train_year == sorted[i].train_year);
    CHECK(records[i].train_sample == sorted[i].train_sample);
    CHECK(records[i].eval_year == sorted[i].eval_year);
    CHECK(records[i].eval_sample == sorted[i].eval_sample);
  }

  auto again = harness::run_matrix(years, config);
  REQUIRE(again.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(again[i].auc == records[i].auc);
    CHECK(again[i].log_loss == records[i].log_loss);
  }

  harness::MatrixConfig threaded = config;
  threaded.workers = 2;
  auto parallel = harness::run_matrix(years, threaded);
  REQUIRE(parallel.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(parallel[i].family == records[i].family);
    CHECK(parallel[i].auc == records[i].auc);
    CHECK(parallel[i].log_loss == records[i].log_loss);
    CHECK(parallel[i].f1 == records[i].f1);
  }
}

// ---------------------------------------------------------------------------
// Tuner

TEST_CASE("draw_trial: points stay inside the box and respect family structure") {
  harness::TunerRanges ranges = harness::default_ranges(models::Family::SaktKc);
  for (std::size_t i = 0; i < 40; ++i) {
    auto h = harness::draw_trial(models::Family::SaktKc, ranges, i, 123);
    CHECK(h.num_steps >= ranges.num_steps_lo);
    CHECK(h.num_steps <= ranges.num_steps_hi);
    CHECK(h.batch_size >= ranges.batch_lo);
    CHECK(h.batch_size <= ranges.batch_hi);
    CHECK(h.d_model >= ranges.d_model_lo);
    CHECK(h.d_model <= ranges.d_model_hi);
    CHECK(h.num_epochs >= ranges.epochs_lo);
    CHECK(h.num_epochs <= ranges.epochs_hi);
    CHECK(h.dropout_rate >= ranges.dropout_lo);
    CHECK(h.dropout_rate <= ranges.dropout_hi);
    CHECK(h.learn_rate >= ranges.lr_lo);
    CHECK(h.learn_rate <= ranges.lr_hi);
    CHECK(h.learn_decay_rate >= ranges.decay_lo);
    CHECK(h.learn_decay_rate <= ranges.decay_hi);
    bool listed = false;
    for (auto c : ranges.head_choices) listed = listed || h.num_heads == c;
    CHECK(listed);
    CHECK(h.d_model % h.num_heads == 0);
  }
}

TEST_CASE("draw_trial: DKT draws skip the attention dimensions") {
  harness::TunerRanges ranges = harness::default_ranges(models::Family::Dkt);
  for (std::size_t i = 0; i < 10; ++i) {
    auto h = harness::draw_trial(models::Family::Dkt, ranges, i, 5);
    CHECK(h.num_heads == 1);
    CHECK(h.learn_decay_rate == 1.0);
    CHECK(h.reg_lambda >= ranges.reg_lo);
    CHECK(h.reg_lambda <= ranges.reg_hi);
  }
}

TEST_CASE("draw_trial: deterministic in (index, seed), spread across indices") {
  harness::TunerRanges ranges = harness::default_ranges(models::Family::SaktE);
  auto a = harness::draw_trial(models::Family::SaktE, ranges, 7, 99);
  auto b = harness::draw_trial(models::Family::SaktE, ranges, 7, 99);
  CHECK(a.d_model == b.d_model);
  CHECK(a.learn_rate == b.learn_rate);
  CHECK(a.dropout_rate == b.dropout_rate);

  auto c = harness::draw_trial(models::Family::SaktE, ranges, 8, 99);
  auto d = harness::draw_trial(models::Family::SaktE, ranges, 7, 100);
  CHECK((c.learn_rate != a.learn_rate || c.d_model != a.d_model));
  CHECK((d.learn_rate != a.learn_rate || d.dropout_rate != a.dropout_rate));
}

TEST_CASE("tune_hyperparams: cross-validated argmax over the requested trials") {
  auto years = tiny_years(1, 1, 40);
  const data::Sample& validation = years[0].samples[0];

  harness::TunerRanges ranges;
  ranges.num_steps_lo = 6;
  ranges.num_steps_hi = 10;
  ranges.batch_lo = 16;
  ranges.batch_hi = 16;
  ranges.d_model_lo = 4;
  ranges.d_model_hi = 8;
  ranges.epochs_lo = 1;
  ranges.epochs_hi = 2;
  ranges.head_choices = {2};

  auto result = harness::tune_hyperparams(models::Family::Dkt, validation, 3, 11, &ranges);
  REQUIRE(result.trials.size() == 3);
  double best = -1.0;
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    REQUIRE(result.trials[i].fold_aucs.size() == harness::kTunerFolds);
    double mean = 0;
    for (double a : result.trials[i].fold_aucs) mean += a;
    mean /= double(harness::kTunerFolds);
    CHECK(result.trials[i].mean_auc == doctest::Approx(mean).epsilon(1e-12));
    if (result.trials[i].mean_auc > best) {
      best = result.trials[i].mean_auc;
      best_idx = i;
    }
  }
  CHECK(result.best_trial == best_idx);
  CHECK(result.best.d_model == result.trials[best_idx].hyper.d_model);
  CHECK(result.best.learn_rate == result.trials[best_idx].hyper.learn_rate);

  auto single = harness::tune_hyperparams(models::Family::Dkt, validation, 1, 11, &ranges);
  CHECK(single.trials.size() == 1);
  CHECK(single.best_trial == 0);
}

// ---------------------------------------------------------------------------
// Report

TEST_CASE("aggregate_report: group stats and family trends") {
  Rng rng(2);
  std::vector<EvalRecord> records;
  for (int yb = 0; yb <= 2; ++yb) {
    std::string ey = yb == 0 ? "2019-2020" : (yb == 1 ? "2020-2021" : "2021-2022");
    for (int i = 0; i < 6; ++i) {
      auto r = rec("BKT", "2019-2020", ey, 0, i, 0.85 - 0.04 * yb + 0.01 * rng.uniform(-1, 1));
      records.push_back(r);
      auto q = rec("DKT", "2019-2020", ey, 1, i, 0.80 - 0.10 * yb + 0.01 * rng.uniform(-1, 1));
      records.push_back(q);
    }
  }
  auto report = harness::aggregate_report(records);
  REQUIRE(report.groups.size() == 6);  // 2 families x 3 gaps
  for (const auto& g : report.groups) {
    CHECK(g.n == 6);
    CHECK(g.auc.lower <= g.auc.mean);
    CHECK(g.auc.upper >= g.auc.mean);
  }
  REQUIRE(report.trends.size() == 2);
  for (const auto& t : report.trends) {
    CHECK(t.n == 18);
    CHECK(t.auc.rho < 0.0);  // degradation with the gap
    CHECK(t.log_loss.rho > 0.0);
  }
  CHECK(report.regressions.count("auc") == 1);
  CHECK(report.regressions.count("log_loss") == 1);
  CHECK(report.regressions.count("f1") == 1);
  CHECK(!report.notes.empty());
}

TEST_CASE("aggregate_report: degenerate groups warn instead of failing") {
  std::vector<EvalRecord> records{rec("BKT", "2019-2020", "2019-2020", 0, 1, 0.8),
                                  rec("BKT", "2019-2020", "2020-2021", 0, 0, 0.7)};
  auto report = harness::aggregate_report(records);  // n=1 per group
  CHECK(report.groups.size() == 2);
  CHECK(!report.warnings.empty());
  for (const auto& g : report.groups) CHECK(g.auc.mean > 0.0);
}

TEST_CASE("aggregate_report: constant metric cannot rank but still reports") {
  std::vector<EvalRecord> records;
  for (int yb = 0; yb <= 1; ++yb)
    for (int i = 0; i < 4; ++i) {
      auto r = rec("PFA", "2019-2020", yb ? "2020-2021" : "2019-2020", 0, i, 0.75);
      records.push_back(r);
    }
  auto report = harness::aggregate_report(records);
  CHECK(!report.warnings.empty());  // constant AUC has no Spearman trend
  CHECK(report.groups.size() == 2);
}

TEST_CASE("ols_fixed_effects: noiseless single-family trend recovers exactly") {
  std::vector<EvalRecord> records;
  for (int yb = 0; yb <= 3; ++yb) {
    std::string ey = "20" + std::to_string(19 + yb) + "-20" + std::to_string(20 + yb);
    for (int i = 0; i < 5; ++i) {
      EvalRecord r = rec("DKT", "2019-2020", ey, 0, i, 0.8 - 0.01 * yb);
      r.auc = 0.8 - 0.01 * yb;  // exactly on the line
      records.push_back(r);
    }
  }
  auto res = harness::ols_fixed_effects(records, "auc");
  REQUIRE(res.terms.size() == 2);  // family intercept + years-between slope
  double alpha = 0, beta = 0;
  for (const auto& t : res.terms) {
    if (t.name.find("DKT") != std::string::npos && t.name.find("YB") == std::string::npos)
      alpha = t.coef;
    if (t.name == "YB") beta = t.coef;
  }
  CHECK(alpha == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(beta == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK(res.adj_r_squared == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("ols_fixed_effects: interactions appear for non-reference families") {
  Rng rng(8);
  std::vector<EvalRecord> records;
  for (int yb = 0; yb <= 3; ++yb) {
    std::string ey = "20" + std::to_string(19 + yb) + "-20" + std::to_string(20 + yb);
    for (int i = 0; i < 6; ++i) {
      EvalRecord b = rec("BKT", "2019-2020", ey, 0, i, 0.0);
      b.auc = 0.84 - 0.010 * yb + 0.002 * rng.uniform(-1, 1);
      records.push_back(b);
      EvalRecord s = rec("SAKT-E", "2019-2020", ey, 0, i, 0.0);
      s.auc = 0.92 - 0.010 * yb - 0.039 * yb + 0.002 * rng.uniform(-1, 1);
      records.push_back(s);
    }
  }
  auto res = harness::ols_fixed_effects(records, "auc");
  std::set<std::string> names;
  for (const auto& t : res.terms) names.insert(t.name);
  CHECK(names.count("BKT"));
  CHECK(names.count("SAKT-E"));
  CHECK(names.count("YB"));
  CHECK(names.count("YB:SAKT-E"));
  CHECK(!names.count("YB:BKT"));  // the reference family carries the shared slope

  for (const auto& t : res.terms) {
    if (t.name == "YB:SAKT-E") {
      CHECK(t.coef == doctest::Approx(-0.039).epsilon(0.1));
      CHECK(t.p_value < 0.001);
    }
    CHECK(t.p_value >= 0.0);
    CHECK(t.p_value <= 1.0);
  }
}

TEST_CASE("report files: json and text exports carry the content") {
  std::vector<EvalRecord> records;
  Rng rng(3);
  for (int yb = 0; yb <= 1; ++yb)
    for (int i = 0; i < 5; ++i) {
      auto r = rec("BKT", "2019-2020", yb ? "2020-2021" : "2019-2020", 0, i,
                   0.8 - 0.05 * yb + 0.01 * rng.uniform(-1, 1));
      records.push_back(r);
    }
  auto report = harness::aggregate_report(records);
  auto jpath = (fs::temp_directory_path() / "kt_report.json").string();
  auto tpath = (fs::temp_directory_path() / "kt_report.txt").string();
  harness::write_report_json(jpath, report);
  harness::write_report_text(tpath, report);

  nlohmann::json doc = nlohmann::json::parse(slurp(jpath));
  CHECK(doc.contains("groups"));
  CHECK(doc.contains("trends"));
  CHECK(doc.contains("regressions"));
  CHECK(doc.contains("notes"));
  CHECK(doc["groups"].size() == report.groups.size());

  std::string text = slurp(tpath);
  CHECK(text.find("BKT") != std::string::npos);
  CHECK(text.find("auc") != std::string::npos);
  fs::remove(jpath);
  fs::remove(tpath);
}
