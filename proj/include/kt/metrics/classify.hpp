#pragma once

#include <cstdint>
#include <vector>

namespace kt::metrics {

// Parallel binary labels and probability scores.
struct ScoredLabels {
  std::vector<std::uint8_t> labels;
  std::vector<double> scores;

  void push(std::uint8_t label, double score) {
    labels.push_back(label);
    scores.push_back(score);
  }
  std::size_t size() const { return labels.size(); }
};

// Rank-based Mann-Whitney AUC with midranks for ties. Throws if only one
// class is present.
double auc(const ScoredLabels& data);

// Mean negative log likelihood; probabilities clamped to [1e-7, 1-1e-7].
double log_loss(const ScoredLabels& data);

// Positive class = correct response; prediction = score >= threshold.
// Returns 0 when precision + recall is 0.
double f1_score(const ScoredLabels& data, double threshold = 0.5);

}  // namespace kt::metrics
