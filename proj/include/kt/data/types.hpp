#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "kt/timeutil.hpp"

namespace kt::data {

// One student/exercise event. Exactly one KC per row.
struct InteractionRow {
  std::string student_id;
  std::string assignment_log_id;
  std::string problem_set_id;
  std::string exercise_id;
  std::string kc_id;
  UtcSeconds timestamp = 0;
  std::uint8_t correct = 0;   // {0,1}
  std::uint8_t gradable = 1;  // {0,1}
};

// All rows of one academic year, in ingest order.
struct LogStore {
  std::string year_label;  // e.g. "2019-2020"
  std::vector<InteractionRow> rows;
};

struct FilterRules {
  std::set<int> excluded_months{6, 7, 8};
  std::size_t min_assignments_per_problem_set = 100;  // counted over the union of all years
  bool require_gradable = true;
};

// A reproducible draw of assignment logs from one year.
struct Sample {
  int sample_id = 0;
  std::string year_label;
  std::uint64_t seed = 0;
  std::set<std::string> assignment_log_ids;
  std::vector<InteractionRow> rows;  // grouped by assignment log
};

// Dense id spaces built from a training sample. The OOV slot is the
// last index and is distinct from every trained id.
class Vocabulary {
 public:
  void add_kc(const std::string& id);
  void add_exercise(const std::string& id);

  // Total index counts, OOV slot included.
  std::size_t kc_count() const { return kc_ids_.size() + 1; }
  std::size_t exercise_count() const { return exercise_ids_.size() + 1; }
  int oov_kc() const { return int(kc_ids_.size()); }
  int oov_exercise() const { return int(exercise_ids_.size()); }

  int kc_index(const std::string& id) const;        // OOV index if unseen
  int exercise_index(const std::string& id) const;  // OOV index if unseen
  bool kc_known(const std::string& id) const { return kc_index_.count(id) > 0; }

  const std::vector<std::string>& kc_ids() const { return kc_ids_; }
  const std::vector<std::string>& exercise_ids() const { return exercise_ids_; }

  std::uint64_t hash() const;

 private:
  std::vector<std::string> kc_ids_;
  std::vector<std::string> exercise_ids_;
  std::unordered_map<std::string, int> kc_index_;
  std::unordered_map<std::string, int> exercise_index_;
};

struct SequenceStep {
  int exercise = 0;  // dense index via vocabulary
  int kc = 0;        // dense index via vocabulary
  std::string exercise_id;
  std::string kc_id;
  std::uint8_t correct = 0;
  UtcSeconds timestamp = 0;
};

// One student's interactions, totally ordered by
// (timestamp, assignment_log_id, ingest order).
struct StudentSequence {
  std::string student_id;
  std::vector<SequenceStep> steps;
};

}  // namespace kt::data
