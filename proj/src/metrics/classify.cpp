#include "kt/metrics/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kt::metrics {

double auc(const ScoredLabels& data) {
  if (data.labels.size() != data.scores.size())
    throw std::invalid_argument("auc: labels/scores length mismatch");
  const std::size_t n = data.size();
  std::size_t n_pos = 0;
  for (auto y : data.labels) n_pos += y != 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc: degenerate input, only one class present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data.scores[a] < data.scores[b]; });

  // midranks over tie groups, then the rank-sum U statistic
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && data.scores[order[j + 1]] == data.scores[order[i]]) ++j;
    const double midrank = (double(i + 1) + double(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k)
      if (data.labels[order[k]] != 0) pos_rank_sum += midrank;
    i = j + 1;
  }
  const double u = pos_rank_sum - double(n_pos) * double(n_pos + 1) / 2.0;
  return u / (double(n_pos) * double(n_neg));
}

double log_loss(const ScoredLabels& data) {
  if (data.size() == 0) throw std::invalid_argument("log_loss: empty input");
  constexpr double eps = 1e-7;
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double p = std::min(1.0 - eps, std::max(eps, data.scores[i]));
    sum += data.labels[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / double(data.size());
}

double f1_score(const ScoredLabels& data, double threshold) {
  if (data.size() == 0) throw std::invalid_argument("f1_score: empty input");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool pred = data.scores[i] >= threshold;
    const bool truth = data.labels[i] != 0;
    if (pred && truth) ++tp;
    else if (pred && !truth) ++fp;
    else if (!pred && truth) ++fn;
  }
  const double precision = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
  const double recall = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace kt::metrics
