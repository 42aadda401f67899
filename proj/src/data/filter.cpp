#include "kt/data/filter.hpp"

#include <set>

namespace kt::data {

std::map<std::string, std::size_t> count_problem_set_assignments(
    const std::vector<const LogStore*>& stores) {
  std::map<std::string, std::set<std::string>> logs_per_set;
  for (const LogStore* s : stores) {
    for (const auto& r : s->rows) logs_per_set[r.problem_set_id].insert(r.assignment_log_id);
  }
  std::map<std::string, std::size_t> counts;
  for (auto& [ps, logs] : logs_per_set) counts[ps] = logs.size();
  return counts;
}

LogStore filter_eligible(const LogStore& store, const FilterRules& rules,
                         const std::map<std::string, std::size_t>& global_assignment_counts) {
  LogStore out;
  out.year_label = store.year_label;
  out.rows.reserve(store.rows.size());
  for (const auto& r : store.rows) {
    if (rules.excluded_months.count(utc_month(r.timestamp))) continue;
    if (rules.require_gradable && !r.gradable) continue;
    auto it = global_assignment_counts.find(r.problem_set_id);
    const std::size_t n = it == global_assignment_counts.end() ? 0 : it->second;
    if (n < rules.min_assignments_per_problem_set) continue;
    out.rows.push_back(r);
  }
  return out;
}

}  // namespace kt::data
