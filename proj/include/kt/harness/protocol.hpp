#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kt/data/types.hpp"
#include "kt/harness/records.hpp"
#include "kt/models/hyper.hpp"
#include "kt/models/train.hpp"

namespace kt::harness {

struct ModelSpec {
  models::Family family = models::Family::Bkt;
  std::optional<models::Hyperparams> hyper;  // deep families only
  std::uint64_t seed = 1;
};

struct YearData {
  std::string year_label;
  std::vector<data::Sample> samples;
};

// Scores every interaction of the eval sample with the fitted model and
// pools them into one record (micro averaging).
EvalRecord evaluate_model(const models::FittedModel& model, const std::string& train_year,
                          int train_sample, const data::Sample& eval_sample);

// Fits one model per sample and evaluates it on every sibling sample:
// n*(n-1) records, years_between = 0. The paper's protocol uses n = 10;
// pass require_ten = false to run shrunk test grids. fitted_out (optional)
// receives the models in sample order for cross-year reuse.
std::vector<EvalRecord> run_within_year(const std::vector<data::Sample>& samples,
                                        const ModelSpec& spec, bool require_ten = true,
                                        std::size_t workers = 1,
                                        std::vector<models::ModelPtr>* fitted_out = nullptr);

// Reuses the within-year models: the model trained on sample id i is
// evaluated on sample index (i mod n) of every strictly later year.
// Throws when later_years is empty or contains the training year or
// earlier. fitted and train_sample_ids are parallel.
std::vector<EvalRecord> run_cross_year(const std::vector<models::ModelPtr>& fitted,
                                       const std::vector<int>& train_sample_ids,
                                       const std::string& train_year,
                                       const std::vector<YearData>& later_years);

struct MatrixConfig {
  std::vector<models::Family> families;
  std::map<models::Family, models::Hyperparams> hyper;  // deep families
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool require_ten = true;
};

// Full grid: within-year on every year plus cross-year onto all later
// years, every family. Output sorted by (family, train_year, train_sample,
// eval_year, eval_sample); deterministic in seed regardless of workers.
std::vector<EvalRecord> run_matrix(const std::vector<YearData>& years, const MatrixConfig& config);

}  // namespace kt::harness
