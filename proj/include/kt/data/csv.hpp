#pragma once

#include <string>
#include <vector>

#include "kt/data/types.hpp"

namespace kt::data {

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::string> messages;  // one per rejected row, capped
};

// Reads the interaction CSV schema:
//   student_id,assignment_log_id,problem_set_id,exercise_id,kc_id,timestamp,correct,gradable
// Header is required; columns may appear in any order; unknown columns are ignored.
// Malformed rows are dropped and counted in the report. Throws on a missing file
// or a missing required column.
LogStore ingest_csv(const std::string& path, const std::string& year_label,
                    IngestReport* report = nullptr);

void write_csv(const LogStore& store, const std::string& path);
void write_csv(const std::vector<InteractionRow>& rows, const std::string& path);

}  // namespace kt::data
