#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grasens/csi.hpp"
#include "grasens/csi_io.hpp"
#include "grasens/metrics.hpp"
#include "grasens/network.hpp"
#include "grasens/optimizer.hpp"

namespace grasens {

struct Sample {
  Tensor input;  // detached (C, H, W)
  std::size_t label = 0;
  std::string source;
  std::size_t start_packet = 0;
};

// Segmented windows grouped by manifest split name ("train", "val", ...).
struct Dataset {
  CsiGeometry geometry;
  std::map<std::string, std::vector<Sample>> splits;

  const std::vector<Sample>& split(const std::string& name) const;  // ConfigError if absent or empty
  std::size_t class_count() const;                                   // 1 + largest label
  Shape input_shape() const;
};

// Reads and segments every manifest entry. The entry label wins over the trace
// label; a window with neither is rejected. All traces must share one geometry.
Dataset load_dataset(const Manifest& manifest, const SegmentSpec& segments, const LayoutOptions& layout = {});

// Copies the dataset's input shape and class count into the model config.
void fit_model_to_dataset(ModelConfig& config, const Dataset& data);

struct EvalResult {
  double loss = 0.0;  // mean cross-entropy
  std::vector<std::size_t> predictions;
  std::vector<std::size_t> truths;
  ClassificationMetrics metrics;
};

// Forward passes without gradient recording. `threads` > 1 splits samples over
// worker threads; results do not depend on the thread count.
EvalResult evaluate(const GraSensModel& model, std::span<const Sample> samples, std::size_t threads = 1);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::string split;
  double loss = 0.0;
  double accuracy = 0.0;
  std::optional<double> precision_macro;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  EvalResult best_val;
  std::vector<std::uint8_t> best_checkpoint;  // encoded checkpoint of the best-validation epoch
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  std::size_t threads = 1;  // evaluation workers
};

// Seeded shuffle per epoch, mean loss over each mini-batch, classic momentum.
// After every epoch the train and val rows are appended to the log; the epoch
// with the highest validation accuracy (ties: lower loss, then earlier) is
// kept as best_checkpoint. A non-finite loss or parameter throws
// DivergenceError carrying the 1-based optimizer step.
TrainResult train(GraSensModel& model, const Dataset& data, const TrainConfig& cfg, const TrainHooks& hooks = {});

// "epoch,split,loss,accuracy,precision_macro" with undefined precision as n/a.
std::string metrics_csv(std::span<const EpochRecord> log);
// Square matrix with a truth/pred header, rows are truth classes.
std::string confusion_csv(const ClassificationMetrics& metrics);

std::string format_metric(std::optional<double> value);

}  // namespace grasens
