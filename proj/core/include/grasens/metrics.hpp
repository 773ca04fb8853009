#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace grasens {

struct ClassificationMetrics {
  double accuracy = 0.0;
  // One-vs-rest TP / (TP + FP); absent when the class was never predicted.
  std::vector<std::optional<double>> precision;
  // confusion[truth][prediction]
  std::vector<std::vector<std::size_t>> confusion;

  // Mean over the defined per-class precisions; absent if none is defined.
  std::optional<double> precision_macro() const;
};

// Throws UsageError on empty or mismatched inputs and on ids >= classes.
ClassificationMetrics compute_metrics(std::span<const std::size_t> predictions, std::span<const std::size_t> truths,
                                      std::size_t classes);

}  // namespace grasens
