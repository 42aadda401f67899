#pragma once

#include <vector>

#include "kt/data/types.hpp"

namespace kt::data {

// Vocabulary over the KCs and exercises present in a training sample.
Vocabulary build_vocabulary(const Sample& sample);

// One sequence per student, steps ordered by (timestamp, assignment_log_id,
// ingest order). Ids unseen by the vocabulary map to its OOV indices.
// Sequences are returned sorted by student_id.
std::vector<StudentSequence> build_sequences(const Sample& sample, const Vocabulary& vocab);

}  // namespace kt::data
