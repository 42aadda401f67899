#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kt/data/types.hpp"

namespace kt::data {

// Draws n_samples pairwise-disjoint samples of sample_size assignment logs.
// Deterministic in (store order, parameters, seed). Throws if the store has
// fewer than n_samples * sample_size distinct assignment logs.
std::vector<Sample> sample_assignment_logs(const LogStore& store, std::size_t n_samples,
                                           std::size_t sample_size, std::uint64_t seed);

// JSON manifest: {sample_id, year_label, seed, assignment_log_ids:[...]}.
void write_sample_manifest(const Sample& sample, const std::string& path);
Sample read_sample_manifest(const std::string& path);  // rows left empty

// Rebuilds sample.rows from a store using the manifest's log id set.
void materialize_sample(Sample& sample, const LogStore& store);

}  // namespace kt::data
