// Workbench CLI: synthetic data generation, ingest/filter/sample plumbing,
// model training and evaluation, the within-/cross-year matrix, hyper
// search, and report building.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kt/data/csv.hpp"
#include "kt/data/filter.hpp"
#include "kt/data/sample.hpp"
#include "kt/data/sequences.hpp"
#include "kt/harness/protocol.hpp"
#include "kt/harness/report.hpp"
#include "kt/harness/tuner.hpp"
#include "kt/models/model_io.hpp"
#include "kt/num/gradcheck.hpp"
#include "kt/num/tape.hpp"
#include "kt/synth/synth.hpp"

namespace fs = std::filesystem;
using namespace kt;

namespace {

// Year files are named year_<label>.csv under the data directory.
std::vector<data::LogStore> load_year_dir(const std::string& data_dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("year_", 0) == 0 && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw std::runtime_error("no year_*.csv files under " + data_dir);
  }
  std::vector<data::LogStore> years;
  for (const auto& f : files) {
    std::string label = f.stem().string().substr(5);
    years.push_back(data::ingest_csv(f.string(), label));
  }
  return years;
}

std::vector<models::Family> parse_families(const std::string& arg) {
  std::vector<models::Family> out;
  std::string token;
  std::stringstream ss(arg);
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) out.push_back(models::parse_family(token));
  }
  if (out.empty()) throw std::runtime_error("no families given");
  return out;
}

models::Hyperparams hyper_for(models::Family family, const std::string& hyper_json,
                              bool test_scale) {
  if (!hyper_json.empty()) {
    std::ifstream in(hyper_json);
    if (!in) throw std::runtime_error("cannot open hyperparameter file: " + hyper_json);
    return models::Hyperparams::from_json(nlohmann::json::parse(in));
  }
  return test_scale ? models::test_scale_defaults(family) : models::tuned_defaults(family);
}

data::Sample load_sample_csv(const std::string& path, const std::string& year_label,
                             int sample_id) {
  data::LogStore store = data::ingest_csv(path, year_label);
  data::Sample sample;
  sample.sample_id = sample_id;
  sample.year_label = year_label;
  sample.rows = std::move(store.rows);
  for (const auto& row : sample.rows) sample.assignment_log_ids.insert(row.assignment_log_id);
  return sample;
}

int run_gradcheck();

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-tracing degradation workbench"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string data_dir = ".";
  std::string out_dir = ".";
  std::size_t workers = 1;
  bool test_scale = false;
  app.add_option("--seed", seed, "top-level RNG seed")->capture_default_str();
  app.add_option("--data-dir", data_dir, "directory with year_<label>.csv files")
      ->capture_default_str();
  app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  app.add_option("--workers", workers, "concurrent fit jobs")->capture_default_str();
  app.add_flag("--test-scale", test_scale, "shrink every protocol size for fast runs");

  // --- synth ---------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "generate drifting synthetic years");
  std::size_t synth_years = 3, synth_students = 500, synth_kcs = 10, synth_steps = 10;
  double drift_l0 = 0.0, drift_t = 0.0, drift_g = 0.0, drift_s = 0.0, drift_f = 0.0;
  synth_cmd->add_option("--years", synth_years, "number of academic years")->capture_default_str();
  synth_cmd->add_option("--students", synth_students, "students per year")->capture_default_str();
  synth_cmd->add_option("--kcs", synth_kcs, "knowledge components")->capture_default_str();
  synth_cmd->add_option("--steps", synth_steps, "interactions per student per KC")
      ->capture_default_str();
  synth_cmd->add_option("--drift-l0", drift_l0, "per-year shift of L0");
  synth_cmd->add_option("--drift-t", drift_t, "per-year shift of T");
  synth_cmd->add_option("--drift-g", drift_g, "per-year shift of G");
  synth_cmd->add_option("--drift-s", drift_s, "per-year shift of S");
  synth_cmd->add_option("--drift-f", drift_f, "per-year shift of F");

  // --- ingest --------------------------------------------------------
  auto* ingest_cmd = app.add_subcommand("ingest", "validate a raw CSV into a year file");
  std::string ingest_input, ingest_label;
  ingest_cmd->add_option("--input", ingest_input, "raw CSV path")->required();
  ingest_cmd->add_option("--year-label", ingest_label, "academic year label, e.g. 2019-2020")
      ->required();

  // --- filter --------------------------------------------------------
  auto* filter_cmd = app.add_subcommand("filter", "apply eligibility rules to all years");
  std::size_t min_assignments = 100;
  bool keep_summer = false, keep_ungradable = false;
  filter_cmd->add_option("--min-assignments", min_assignments,
                         "problem-set assignment threshold (pooled over years)")
      ->capture_default_str();
  filter_cmd->add_flag("--keep-summer", keep_summer, "keep June-August rows");
  filter_cmd->add_flag("--keep-ungradable", keep_ungradable, "keep non-gradable rows");

  // --- sample --------------------------------------------------------
  auto* sample_cmd = app.add_subcommand("sample", "draw disjoint assignment-log samples");
  std::size_t samples_per_year = 10, sample_size = 1000;
  sample_cmd->add_option("--samples-per-year", samples_per_year, "samples per year")
      ->capture_default_str();
  sample_cmd->add_option("--sample-size", sample_size, "assignment logs per sample")
      ->capture_default_str();

  // --- train ---------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "fit one model on one sample CSV");
  std::string train_family = "BKT", train_input, train_year = "0-0", train_out = "model.bin";
  std::string train_hyper;
  train_cmd->add_option("--family", train_family, "BKT|PFA|DKT|SAKT-KC|SAKT-E")
      ->capture_default_str();
  train_cmd->add_option("--input", train_input, "training sample CSV")->required();
  train_cmd->add_option("--year-label", train_year, "training year label")->capture_default_str();
  train_cmd->add_option("--hyper", train_hyper, "hyperparameter JSON file");
  train_cmd->add_option("--out", train_out, "model output path")->capture_default_str();

  // --- eval ----------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model on a sample CSV");
  std::string eval_model, eval_input, eval_year = "0-0", eval_train_year = "0-0";
  int eval_train_sample = 0, eval_sample_id = 0;
  eval_cmd->add_option("--model", eval_model, "model file from train")->required();
  eval_cmd->add_option("--input", eval_input, "evaluation sample CSV")->required();
  eval_cmd->add_option("--year-label", eval_year, "evaluation year label")->capture_default_str();
  eval_cmd->add_option("--train-year", eval_train_year, "label the model was trained on")
      ->capture_default_str();
  eval_cmd->add_option("--train-sample", eval_train_sample, "train sample id")
      ->capture_default_str();
  eval_cmd->add_option("--eval-sample", eval_sample_id, "eval sample id")->capture_default_str();

  // --- matrix --------------------------------------------------------
  auto* matrix_cmd = app.add_subcommand("matrix", "full within- and cross-year grid");
  std::string matrix_families = "BKT,PFA";
  std::size_t matrix_samples = 10, matrix_sample_size = 1000;
  matrix_cmd->add_option("--families", matrix_families, "comma-separated family list")
      ->capture_default_str();
  matrix_cmd->add_option("--samples-per-year", matrix_samples, "samples per year")
      ->capture_default_str();
  matrix_cmd->add_option("--sample-size", matrix_sample_size, "assignment logs per sample")
      ->capture_default_str();

  // --- tune ----------------------------------------------------------
  auto* tune_cmd = app.add_subcommand("tune", "quasi-random hyperparameter search");
  std::string tune_family = "DKT";
  int tune_trials = harness::kDefaultTrials;
  std::size_t tune_logs = 100000;
  tune_cmd->add_option("--family", tune_family, "DKT|SAKT-KC|SAKT-E")->capture_default_str();
  tune_cmd->add_option("--trials", tune_trials, "search rounds")->capture_default_str();
  tune_cmd->add_option("--logs", tune_logs, "validation assignment logs pooled over years")
      ->capture_default_str();

  // --- report --------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "aggregate a records CSV");
  std::string report_records = "records.csv";
  report_cmd->add_option("--records", report_records, "records CSV from matrix/eval")
      ->capture_default_str();

  // --- gradcheck -----------------------------------------------------
  app.add_subcommand("gradcheck", "finite-difference check of the deep losses");

  CLI11_PARSE(app, argc, argv);
  try {
    fs::create_directories(out_dir);

    if (synth_cmd->parsed()) {
      synth::SynthConfig config;
      config.n_students = synth_students;
      config.n_kcs = synth_kcs;
      config.steps_per_student_per_kc = synth_steps;
      config.truths = synth::spread_truths(synth_kcs, seed);
      config.drift = synth::DriftSpec{drift_l0, drift_t, drift_g, drift_s, drift_f, 0.01, 0.99};
      config.seed = seed;
      for (std::size_t yi = 0; yi < synth_years; ++yi) {
        synth::SynthYear year = synth::simulate_year(config, yi);
        fs::path csv = fs::path(out_dir) / ("year_" + year.store.year_label + ".csv");
        data::write_csv(year.store, csv.string());
        fs::path truth = fs::path(out_dir) / ("truth_" + year.store.year_label + ".json");
        synth::write_truth_json(year, truth.string());
        std::cout << "wrote " << csv.string() << " (" << year.store.rows.size() << " rows)\n";
      }
      return 0;
    }

    if (ingest_cmd->parsed()) {
      data::IngestReport report;
      data::LogStore store = data::ingest_csv(ingest_input, ingest_label, &report);
      fs::path out = fs::path(out_dir) / ("year_" + ingest_label + ".csv");
      data::write_csv(store, out.string());
      std::cout << "accepted " << report.accepted << ", rejected " << report.rejected << "\n";
      for (const auto& m : report.messages) std::cout << "  " << m << "\n";
      std::cout << "wrote " << out.string() << "\n";
      return 0;
    }

    if (filter_cmd->parsed()) {
      std::vector<data::LogStore> years = load_year_dir(data_dir);
      std::vector<const data::LogStore*> ptrs;
      for (const auto& y : years) ptrs.push_back(&y);
      auto counts = data::count_problem_set_assignments(ptrs);
      data::FilterRules rules;
      rules.min_assignments_per_problem_set = min_assignments;
      if (keep_summer) rules.excluded_months.clear();
      rules.require_gradable = !keep_ungradable;
      for (const auto& y : years) {
        data::LogStore kept = data::filter_eligible(y, rules, counts);
        fs::path out = fs::path(out_dir) / ("year_" + y.year_label + ".csv");
        data::write_csv(kept, out.string());
        std::cout << y.year_label << ": kept " << kept.rows.size() << "/" << y.rows.size()
                  << " rows\n";
      }
      return 0;
    }

    if (sample_cmd->parsed()) {
      std::vector<data::LogStore> years = load_year_dir(data_dir);
      for (const auto& y : years) {
        std::vector<data::Sample> samples =
            data::sample_assignment_logs(y, samples_per_year, sample_size, seed);
        for (const auto& s : samples) {
          fs::path base = fs::path(out_dir) /
                          ("sample_" + y.year_label + "_" + std::to_string(s.sample_id));
          data::write_sample_manifest(s, base.string() + ".json");
          data::write_csv(s.rows, base.string() + ".csv");
        }
        std::cout << y.year_label << ": " << samples.size() << " samples of " << sample_size
                  << " logs\n";
      }
      return 0;
    }

    if (train_cmd->parsed()) {
      models::Family family = models::parse_family(train_family);
      data::Sample sample = load_sample_csv(train_input, train_year, 0);
      data::Vocabulary vocab = data::build_vocabulary(sample);
      auto sequences = data::build_sequences(sample, vocab);
      models::Hyperparams hyper;
      const models::Hyperparams* hp = nullptr;
      if (models::is_deep(family)) {
        hyper = hyper_for(family, train_hyper, test_scale);
        hp = &hyper;
      }
      models::ModelPtr model = models::fit_model(family, sequences, vocab, hp, seed, workers);
      fs::path out = fs::path(out_dir) / train_out;
      models::save_model(out.string(), *model);
      std::cout << "trained " << models::family_name(family) << " ("
                << model->count_params() << " parameters) -> " << out.string() << "\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      models::ModelPtr model = models::load_model(eval_model);
      data::Sample sample = load_sample_csv(eval_input, eval_year, eval_sample_id);
      harness::EvalRecord r =
          harness::evaluate_model(*model, eval_train_year, eval_train_sample, sample);
      fs::path out = fs::path(out_dir) / "records.csv";
      std::vector<harness::EvalRecord> records;
      if (fs::exists(out)) records = harness::read_records_csv(out.string());
      records.push_back(r);
      harness::sort_records(records);
      harness::write_records_csv(out.string(), records);
      std::cout << r.family << " " << r.train_year << "->" << r.eval_year << " auc " << r.auc
                << " log_loss " << r.log_loss << " f1 " << r.f1 << " (" << r.n_interactions
                << " interactions)\n";
      return 0;
    }

    if (matrix_cmd->parsed()) {
      std::vector<data::LogStore> years = load_year_dir(data_dir);
      std::size_t n_samples = test_scale ? std::min<std::size_t>(matrix_samples, 3) : matrix_samples;
      std::vector<harness::YearData> grid;
      for (const auto& y : years) {
        harness::YearData yd;
        yd.year_label = y.year_label;
        yd.samples = data::sample_assignment_logs(y, n_samples, matrix_sample_size, seed);
        grid.push_back(std::move(yd));
      }
      harness::MatrixConfig config;
      config.families = parse_families(matrix_families);
      config.seed = seed;
      config.workers = workers;
      config.require_ten = !test_scale && n_samples == 10;
      for (models::Family f : config.families) {
        if (models::is_deep(f)) {
          config.hyper[f] = test_scale ? models::test_scale_defaults(f) : models::tuned_defaults(f);
        }
      }
      std::vector<harness::EvalRecord> records = harness::run_matrix(grid, config);
      fs::path out = fs::path(out_dir) / "records.csv";
      harness::write_records_csv(out.string(), records);
      std::cout << "wrote " << records.size() << " records -> " << out.string() << "\n";
      return 0;
    }

    if (tune_cmd->parsed()) {
      models::Family family = models::parse_family(tune_family);
      std::vector<data::LogStore> years = load_year_dir(data_dir);
      // The validation pool merges every year before drawing assignment logs.
      data::LogStore pooled;
      pooled.year_label = "pooled";
      for (const auto& y : years) {
        pooled.rows.insert(pooled.rows.end(), y.rows.begin(), y.rows.end());
      }
      std::size_t logs = test_scale ? std::min<std::size_t>(tune_logs, 200) : tune_logs;
      std::vector<data::Sample> validation = data::sample_assignment_logs(pooled, 1, logs, seed);
      harness::TunerRanges ranges = harness::default_ranges(family);
      if (test_scale) {
        ranges.d_model_lo = 8;
        ranges.d_model_hi = 32;
        ranges.epochs_lo = 1;
        ranges.epochs_hi = 3;
        ranges.num_steps_lo = 10;
        ranges.num_steps_hi = 20;
        ranges.head_choices = {2, 4};
      }
      harness::TuneResult result =
          harness::tune_hyperparams(family, validation.front(), tune_trials, seed, &ranges, workers);
      nlohmann::json log = {{"family", models::family_name(family)},
                            {"best_trial", result.best_trial},
                            {"best", result.best.to_json()},
                            {"trials", nlohmann::json::array()}};
      for (const auto& t : result.trials) {
        log["trials"].push_back({{"hyper", t.hyper.to_json()},
                                 {"fold_aucs", t.fold_aucs},
                                 {"mean_auc", t.mean_auc}});
      }
      fs::path out = fs::path(out_dir) / ("tune_" + std::string(models::family_name(family)) + ".json");
      std::ofstream file(out);
      file << log.dump(2) << "\n";
      std::cout << "best mean AUC " << result.trials[result.best_trial].mean_auc << " -> "
                << out.string() << "\n";
      return 0;
    }

    if (report_cmd->parsed()) {
      std::vector<harness::EvalRecord> records = harness::read_records_csv(report_records);
      harness::ReportBundle bundle = harness::aggregate_report(records);
      fs::path json_out = fs::path(out_dir) / "report.json";
      fs::path text_out = fs::path(out_dir) / "report.txt";
      fs::path csv_out = fs::path(out_dir) / "records.csv";
      harness::write_report_json(json_out.string(), bundle);
      harness::write_report_text(text_out.string(), bundle);
      harness::write_records_csv(csv_out.string(), records);
      std::cout << "wrote " << json_out.string() << ", " << text_out.string() << "\n";
      for (const auto& w : bundle.warnings) std::cout << "warning: " << w << "\n";
      return 0;
    }

    if (app.get_subcommand("gradcheck")->parsed()) return run_gradcheck();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

namespace {

// Toy-batch finite-difference checks, shared with the acceptance suite's
// tolerances (1e-4 max relative error).
int run_gradcheck() {
  using namespace kt::models;
  auto toy_sequences = [] {
    std::vector<data::StudentSequence> seqs(2);
    Rng rng(7);
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      seqs[s].student_id = "s" + std::to_string(s);
      for (int i = 0; i < 4; ++i) {
        data::SequenceStep step;
        step.kc = int(rng.next_below(3));
        step.exercise = step.kc;
        step.correct = rng.bernoulli(0.6) ? 1 : 0;
        step.timestamp = i;
        seqs[s].steps.push_back(step);
      }
    }
    return seqs;
  };

  auto check_net = [&](auto make_net, Unit unit, const char* name) {
    auto sequences = toy_sequences();
    auto windows = make_windows(sequences, 4);
    auto batches = stack_batches(windows, 4, 8, unit, nullptr, nullptr);
    auto net = make_net();
    std::vector<num::Tensor*> params = net.trainable();
    std::vector<num::real> point;
    for (num::Tensor* t : params)
      point.insert(point.end(), t->data().begin(), t->data().end());

    auto load_point = [&](const std::vector<num::real>& x) {
      std::size_t off = 0;
      for (num::Tensor* t : params) {
        std::copy(x.begin() + long(off), x.begin() + long(off + t->size()), t->data().begin());
        off += t->size();
      }
    };
    num::DiffProblem problem;
    problem.value = [&](const std::vector<num::real>& x) {
      load_point(x);
      num::Tape tape;
      auto bound = net.bind(tape);
      num::Var probs = net.forward_probs(tape, bound, batches[0], false, nullptr);
      num::Var loss = tape.bce_mean(probs, net.flat_labels(batches[0]), net.flat_mask(batches[0]));
      return double(tape.value(loss)[0]);
    };
    problem.tape_gradient = [&](const std::vector<num::real>& x) {
      load_point(x);
      num::Tape tape;
      auto bound = net.bind(tape);
      num::Var probs = net.forward_probs(tape, bound, batches[0], false, nullptr);
      num::Var loss = tape.bce_mean(probs, net.flat_labels(batches[0]), net.flat_mask(batches[0]));
      tape.backward(loss);
      std::vector<num::real> g;
      for (num::Var v : bound) {
        const num::Tensor& gt = tape.grad(v);
        g.insert(g.end(), gt.data().begin(), gt.data().end());
      }
      return g;
    };
    double err = num::grad_check(problem, point, 1e-5);
    std::cout << name << " max relative error " << err << (err < 1e-4 ? " (ok)" : " (FAIL)")
              << "\n";
    return err < 1e-4 ? 0 : 1;
  };

  models::Hyperparams hyper;
  hyper.num_steps = 4;
  hyper.batch_size = 8;
  hyper.d_model = 4;
  hyper.num_epochs = 1;
  hyper.dropout_rate = 0.0;
  hyper.num_heads = 2;
  hyper.learn_decay_rate = 1.0;

  int rc = 0;
  rc |= check_net([&] { return DktNet(4, hyper, 11); }, Unit::Kc, "dkt");
  rc |= check_net([&] { return SaktNet(4, hyper, 12); }, Unit::Kc, "sakt");
  return rc;
}

}  // namespace
