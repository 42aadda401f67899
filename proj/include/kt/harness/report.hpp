#pragma once

#include <map>
#include <string>
#include <vector>

#include "kt/harness/records.hpp"
#include "kt/metrics/ols.hpp"
#include "kt/metrics/stats.hpp"

namespace kt::harness {

struct GroupStat {
  std::string family;
  int years_between = 0;
  std::size_t n = 0;
  metrics::MeanCi auc, log_loss, f1;  // 95% t intervals
};

struct FamilyTrend {
  std::string family;
  std::size_t n = 0;
  metrics::SpearmanResult auc, log_loss, f1;  // vs years_between
};

struct ReportBundle {
  std::vector<GroupStat> groups;                            // per (family, years_between)
  std::vector<FamilyTrend> trends;                          // per family
  std::map<std::string, metrics::RegressionResult> regressions;  // auc, log_loss, f1
  std::vector<std::string> warnings;
  std::vector<std::string> notes;  // methodology notes carried into every export
};

// Degradation regression: one indicator column per family present (no
// global intercept), a years-between column, and years-between
// interactions for every family but the reference (BKT when present).
metrics::RegressionResult ols_fixed_effects(const std::vector<EvalRecord>& records,
                                            const std::string& metric);

// Group means/CIs, per-family Spearman trends, and the three regressions.
// Degenerate groups are skipped with a warning rather than failing the run.
ReportBundle aggregate_report(const std::vector<EvalRecord>& records);

void write_report_json(const std::string& path, const ReportBundle& report);
void write_report_text(const std::string& path, const ReportBundle& report);

}  // namespace kt::harness
