#include "kt/data/sequences.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace kt::data {

void Vocabulary::add_kc(const std::string& id) {
  if (kc_index_.emplace(id, int(kc_ids_.size())).second) kc_ids_.push_back(id);
}

void Vocabulary::add_exercise(const std::string& id) {
  if (exercise_index_.emplace(id, int(exercise_ids_.size())).second) exercise_ids_.push_back(id);
}

int Vocabulary::kc_index(const std::string& id) const {
  auto it = kc_index_.find(id);
  return it == kc_index_.end() ? oov_kc() : it->second;
}

int Vocabulary::exercise_index(const std::string& id) const {
  auto it = exercise_index_.find(id);
  return it == exercise_index_.end() ? oov_exercise() : it->second;
}

std::uint64_t Vocabulary::hash() const {
  // FNV-1a over the ordered id lists
  std::uint64_t h = 1469598103934665603ULL;
  auto eat = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& s : kc_ids_) eat(s);
  eat("|");
  for (const auto& s : exercise_ids_) eat(s);
  return h;
}

Vocabulary build_vocabulary(const Sample& sample) {
  Vocabulary v;
  for (const auto& r : sample.rows) {
    v.add_kc(r.kc_id);
    v.add_exercise(r.exercise_id);
  }
  return v;
}

std::vector<StudentSequence> build_sequences(const Sample& sample, const Vocabulary& vocab) {
  struct Keyed {
    const InteractionRow* row;
    std::size_t ordinal;
  };
  std::map<std::string, std::vector<Keyed>> by_student;
  for (std::size_t i = 0; i < sample.rows.size(); ++i)
    by_student[sample.rows[i].student_id].push_back({&sample.rows[i], i});

  std::vector<StudentSequence> out;
  out.reserve(by_student.size());
  for (auto& [student, keyed] : by_student) {
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
      return std::tie(a.row->timestamp, a.row->assignment_log_id, a.ordinal) <
             std::tie(b.row->timestamp, b.row->assignment_log_id, b.ordinal);
    });
    StudentSequence seq;
    seq.student_id = student;
    seq.steps.reserve(keyed.size());
    for (const Keyed& k : keyed) {
      SequenceStep step;
      step.exercise = vocab.exercise_index(k.row->exercise_id);
      step.kc = vocab.kc_index(k.row->kc_id);
      step.exercise_id = k.row->exercise_id;
      step.kc_id = k.row->kc_id;
      step.correct = k.row->correct;
      step.timestamp = k.row->timestamp;
      seq.steps.push_back(std::move(step));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace kt::data
