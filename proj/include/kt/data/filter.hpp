#pragma once

#include <map>
#include <string>
#include <vector>

#include "kt/data/types.hpp"

namespace kt::data {

// Distinct assignment logs per problem set, pooled over all given years.
// This is the "assigned N times total" count the eligibility rule uses.
std::map<std::string, std::size_t> count_problem_set_assignments(
    const std::vector<const LogStore*>& stores);

// Drops summer months, non-gradable rows, and rows of rarely assigned
// problem sets. Order-preserving and idempotent.
LogStore filter_eligible(const LogStore& store, const FilterRules& rules,
                         const std::map<std::string, std::size_t>& global_assignment_counts);

}  // namespace kt::data
