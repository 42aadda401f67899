#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "kt/data/types.hpp"
#include "kt/num/tensor.hpp"
#include "kt/rng.hpp"

namespace kt::models {

enum class Unit { Kc, Exercise };

// One contiguous slice of a student sequence, at most num_steps long.
struct Window {
  const data::StudentSequence* seq = nullptr;
  std::size_t begin = 0;
  std::size_t len = 0;
};

// A padded stack of windows. Row-major B x T. At position t the input is
// the interaction before target t; prev_id = -1 marks "no input row"
// (sequence start or padding), with start[t] = 1 distinguishing the start
// token from padding. Short windows are left-padded (valid = 0).
struct Batch {
  std::size_t rows = 0;   // B
  std::size_t steps = 0;  // T
  std::vector<int> prev_id;       // B*T; dense id of the previous interaction
  std::vector<int> prev_correct;  // B*T; -1 where prev_id = -1
  std::vector<std::uint8_t> start;  // B*T; 1 where the input is the start token
  std::vector<int> target_id;     // B*T; 0 on padding (masked)
  num::Tensor labels;             // B x T
  num::Tensor valid;              // B x T; 1 = supervised position
};

// During training, ids from this set are replaced by oov_id with
// probability prob, independently per occurrence.
struct RareIdSub {
  std::unordered_set<int> rare_ids;
  int oov_id = 0;
  double prob = 0.1;
};

// Non-overlapping segmentation of every sequence; the final short window
// keeps its natural begin/len and is left-padded at batch time.
std::vector<Window> make_windows(const std::vector<data::StudentSequence>& sequences,
                                 std::size_t num_steps);

// Stacks windows into batches of at most batch_size, in the given order
// (shuffle beforehand for training). sub and sub_rng apply rare-id
// substitution; pass nullptr for evaluation.
std::vector<Batch> stack_batches(const std::vector<Window>& windows, std::size_t num_steps,
                                 std::size_t batch_size, Unit unit, const RareIdSub* sub,
                                 Rng* sub_rng);

// Convenience: segment, shuffle by seed, stack.
std::vector<Batch> make_batches(const std::vector<data::StudentSequence>& sequences,
                                std::size_t num_steps, std::size_t batch_size, Unit unit,
                                std::uint64_t seed);

}  // namespace kt::models
