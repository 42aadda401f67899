#include "kt/models/batch.hpp"

#include <stdexcept>

namespace kt::models {

std::vector<Window> make_windows(const std::vector<data::StudentSequence>& sequences,
                                 std::size_t num_steps) {
  if (num_steps == 0) throw std::invalid_argument("make_windows: num_steps must be positive");
  std::vector<Window> windows;
  for (const auto& seq : sequences) {
    for (std::size_t begin = 0; begin < seq.steps.size(); begin += num_steps) {
      windows.push_back({&seq, begin, std::min(num_steps, seq.steps.size() - begin)});
    }
  }
  return windows;
}

std::vector<Batch> stack_batches(const std::vector<Window>& windows, std::size_t num_steps,
                                 std::size_t batch_size, Unit unit, const RareIdSub* sub,
                                 Rng* sub_rng) {
  if (batch_size == 0) throw std::invalid_argument("stack_batches: batch_size must be positive");
  auto id_of = [unit](const data::SequenceStep& s) {
    return unit == Unit::Kc ? s.kc : s.exercise;
  };
  auto maybe_sub = [&](int id) {
    if (sub && sub->rare_ids.count(id) && sub_rng->bernoulli(sub->prob)) return sub->oov_id;
    return id;
  };

  std::vector<Batch> batches;
  for (std::size_t w0 = 0; w0 < windows.size(); w0 += batch_size) {
    std::size_t b = std::min(batch_size, windows.size() - w0);
    Batch batch;
    batch.rows = b;
    batch.steps = num_steps;
    batch.prev_id.assign(b * num_steps, -1);
    batch.prev_correct.assign(b * num_steps, -1);
    batch.start.assign(b * num_steps, 0);
    batch.target_id.assign(b * num_steps, 0);
    batch.labels = num::Tensor({b, num_steps});
    batch.valid = num::Tensor({b, num_steps});
    for (std::size_t bi = 0; bi < b; ++bi) {
      const Window& w = windows[w0 + bi];
      std::size_t pad = num_steps - w.len;
      for (std::size_t k = 0; k < w.len; ++k) {
        std::size_t t = pad + k;            // left padding
        std::size_t i = w.begin + k;        // index into the full sequence
        std::size_t flat = bi * num_steps + t;
        const auto& step = w.seq->steps[i];
        batch.target_id[flat] = maybe_sub(id_of(step));
        batch.labels.at(bi, t) = num::real(step.correct);
        batch.valid.at(bi, t) = num::real(1);
        if (i == 0) {
          batch.start[flat] = 1;  // sequence start: no previous interaction
        } else {
          const auto& prev = w.seq->steps[i - 1];
          batch.prev_id[flat] = maybe_sub(id_of(prev));
          batch.prev_correct[flat] = int(prev.correct);
        }
      }
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<Batch> make_batches(const std::vector<data::StudentSequence>& sequences,
                                std::size_t num_steps, std::size_t batch_size, Unit unit,
                                std::uint64_t seed) {
  std::vector<Window> windows = make_windows(sequences, num_steps);
  Rng rng = Rng::substream(seed, {0x626174636865ull});
  rng.shuffle(windows);
  return stack_batches(windows, num_steps, batch_size, unit, nullptr, nullptr);
}

}  // namespace kt::models
