#include "grasens/metrics.hpp"

#include <string>

#include "grasens/errors.hpp"

namespace grasens {

std::optional<double> ClassificationMetrics::precision_macro() const {
  double total = 0.0;
  std::size_t defined = 0;
  for (const auto& p : precision) {
    if (p) {
      total += *p;
      ++defined;
    }
  }
  if (defined == 0) return std::nullopt;
  return total / static_cast<double>(defined);
}

ClassificationMetrics compute_metrics(std::span<const std::size_t> predictions, std::span<const std::size_t> truths,
                                      std::size_t classes) {
  if (predictions.empty()) throw UsageError("metrics need at least one sample");
  if (predictions.size() != truths.size()) {
    throw UsageError("metrics: " + std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(truths.size()) + " labels");
  }
  ClassificationMetrics m;
  m.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] >= classes || truths[i] >= classes) {
      throw UsageError("metrics: class id outside " + std::to_string(classes) + " classes");
    }
    ++m.confusion[truths[i]][predictions[i]];
    correct += predictions[i] == truths[i] ? 1 : 0;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
  m.precision.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t predicted = 0;
    for (std::size_t t = 0; t < classes; ++t) predicted += m.confusion[t][c];
    if (predicted > 0) m.precision[c] = static_cast<double>(m.confusion[c][c]) / static_cast<double>(predicted);
  }
  return m;
}

}  // namespace grasens
