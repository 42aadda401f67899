#include "kt/harness/protocol.hpp"

#include <atomic>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "kt/data/sequences.hpp"
#include "kt/metrics/classify.hpp"

namespace kt::harness {

namespace {

// Deep models score dense ids, so eval sequences must be built with the
// model's own vocabulary; classical models key on raw id strings and any
// vocabulary will do.
std::vector<data::StudentSequence> eval_sequences(const models::FittedModel& model,
                                                  const data::Sample& sample) {
  if (const auto* deep = dynamic_cast<const models::DeepModel*>(&model)) {
    return data::build_sequences(sample, deep->vocab());
  }
  return data::build_sequences(sample, data::build_vocabulary(sample));
}

models::ModelPtr fit_on_sample(const ModelSpec& spec, const data::Sample& sample,
                               std::uint64_t job_seed) {
  data::Vocabulary vocab = data::build_vocabulary(sample);
  std::vector<data::StudentSequence> sequences = data::build_sequences(sample, vocab);
  const models::Hyperparams* hyper = spec.hyper ? &*spec.hyper : nullptr;
  return models::fit_model(spec.family, sequences, vocab, hyper, job_seed);
}

std::uint64_t job_seed(std::uint64_t seed, models::Family family, const std::string& year,
                       int sample_id) {
  std::uint64_t year_tag = 1469598103934665603ull;  // FNV-1a over the label
  for (char c : year) {
    year_tag ^= std::uint64_t(static_cast<unsigned char>(c));
    year_tag *= 1099511628211ull;
  }
  Rng r = Rng::substream(seed, {std::uint64_t(family), year_tag, std::uint64_t(sample_id)});
  return r.next_u64();
}

}  // namespace

EvalRecord evaluate_model(const models::FittedModel& model, const std::string& train_year,
                          int train_sample, const data::Sample& eval_sample) {
  std::vector<data::StudentSequence> sequences = eval_sequences(model, eval_sample);
  metrics::ScoredLabels scored;
  for (const auto& seq : sequences) {
    std::vector<double> probs = model.predict_sequence(seq);
    for (std::size_t i = 0; i < seq.steps.size(); ++i) {
      scored.push(seq.steps[i].correct, probs[i]);
    }
  }
  EvalRecord r;
  r.family = models::family_name(model.family());
  r.train_year = train_year;
  r.eval_year = eval_sample.year_label;
  r.years_between = year_start(eval_sample.year_label) - year_start(train_year);
  r.train_sample = train_sample;
  r.eval_sample = eval_sample.sample_id;
  r.n_interactions = scored.size();
  try {
    r.auc = metrics::auc(scored);
    r.log_loss = metrics::log_loss(scored);
    r.f1 = metrics::f1_score(scored);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("evaluation failed for ") + r.family + " " + train_year +
                             " s" + std::to_string(train_sample) + " on " + r.eval_year + " s" +
                             std::to_string(r.eval_sample) + ": " + e.what());
  }
  if (r.years_between < 0) {
    throw std::logic_error("evaluate_model: eval year precedes train year");
  }
  return r;
}

std::vector<EvalRecord> run_within_year(const std::vector<data::Sample>& samples,
                                        const ModelSpec& spec, bool require_ten,
                                        std::size_t workers,
                                        std::vector<models::ModelPtr>* fitted_out) {
  if (require_ten && samples.size() != 10) {
    throw std::invalid_argument("run_within_year: protocol expects exactly 10 samples, got " +
                                std::to_string(samples.size()));
  }
  if (samples.size() < 2) throw std::invalid_argument("run_within_year: need at least 2 samples");
  const std::string& year = samples.front().year_label;
  for (const auto& s : samples) {
    if (s.year_label != year)
      throw std::invalid_argument("run_within_year: samples span multiple years");
  }

  std::vector<models::ModelPtr> fitted(samples.size());
  std::vector<std::vector<EvalRecord>> per_job(samples.size());
  auto run_job = [&](std::size_t i) {
    const data::Sample& train = samples[i];
    models::ModelPtr model =
        fit_on_sample(spec, train, job_seed(spec.seed, spec.family, year, train.sample_id));
    for (const data::Sample& eval : samples) {
      if (eval.sample_id == train.sample_id) continue;
      per_job[i].push_back(evaluate_model(*model, year, train.sample_id, eval));
    }
    fitted[i] = std::move(model);
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) run_job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, samples.size()); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < samples.size(); i = next.fetch_add(1))
          run_job(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<EvalRecord> records;
  for (auto& chunk : per_job)
    for (auto& r : chunk) records.push_back(std::move(r));
  sort_records(records);
  if (fitted_out) *fitted_out = std::move(fitted);
  return records;
}

std::vector<EvalRecord> run_cross_year(const std::vector<models::ModelPtr>& fitted,
                                       const std::vector<int>& train_sample_ids,
                                       const std::string& train_year,
                                       const std::vector<YearData>& later_years) {
  if (fitted.size() != train_sample_ids.size())
    throw std::invalid_argument("run_cross_year: fitted/train_sample_ids mismatch");
  if (later_years.empty()) throw std::invalid_argument("run_cross_year: no later years");
  for (const auto& y : later_years) {
    if (year_start(y.year_label) <= year_start(train_year)) {
      throw std::invalid_argument("run_cross_year: year " + y.year_label +
                                  " is not after " + train_year);
    }
    if (y.samples.empty())
      throw std::invalid_argument("run_cross_year: year " + y.year_label + " has no samples");
  }

  std::vector<EvalRecord> records;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    int id = train_sample_ids[i];
    for (const YearData& y : later_years) {
      const data::Sample& eval = y.samples[std::size_t(id) % y.samples.size()];
      records.push_back(evaluate_model(*fitted[i], train_year, id, eval));
    }
  }
  sort_records(records);
  return records;
}

std::vector<EvalRecord> run_matrix(const std::vector<YearData>& years,
                                   const MatrixConfig& config) {
  if (years.empty()) throw std::invalid_argument("run_matrix: no years");
  if (config.families.empty()) throw std::invalid_argument("run_matrix: no families");

  std::vector<EvalRecord> records;
  for (models::Family family : config.families) {
    ModelSpec spec;
    spec.family = family;
    spec.seed = config.seed;
    auto it = config.hyper.find(family);
    if (it != config.hyper.end()) spec.hyper = it->second;

    for (std::size_t yi = 0; yi < years.size(); ++yi) {
      std::vector<models::ModelPtr> fitted;
      std::vector<EvalRecord> within = run_within_year(years[yi].samples, spec,
                                                       config.require_ten, config.workers, &fitted);
      for (auto& r : within) records.push_back(std::move(r));

      // reuse the fitted models: cross-year indexes by train sample id
      std::vector<YearData> later(years.begin() + long(yi) + 1, years.end());
      if (!later.empty()) {
        std::vector<int> ids;
        for (const auto& s : years[yi].samples) ids.push_back(s.sample_id);
        std::vector<EvalRecord> cross =
            run_cross_year(fitted, ids, years[yi].year_label, later);
        for (auto& r : cross) records.push_back(std::move(r));
      }
    }
  }
  sort_records(records);
  return records;
}

}  // namespace kt::harness
