#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace kt::harness {

// One (trained model, evaluation sample) measurement.
struct EvalRecord {
  std::string family;
  std::string train_year;
  std::string eval_year;
  int years_between = 0;
  int train_sample = 0;
  int eval_sample = 0;
  double auc = 0.0;
  double log_loss = 0.0;
  double f1 = 0.0;
  std::size_t n_interactions = 0;
};

// Leading calendar year of a label like "2019-2020".
int year_start(const std::string& year_label);

// Columns: family,train_year,eval_year,years_between,train_sample,
// eval_sample,auc,log_loss,f1,n_interactions. Doubles are written
// shortest-round-trip, so equal inputs give byte-identical files.
void write_records_csv(const std::string& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records_csv(const std::string& path);

// Protocol order: family (canonical), train_year, train_sample, eval_year,
// eval_sample.
void sort_records(std::vector<EvalRecord>& records);

}  // namespace kt::harness
