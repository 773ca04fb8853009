#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grasens/antialias.hpp"
#include "grasens/csi.hpp"
#include "grasens/fractal.hpp"
#include "grasens/gabor.hpp"
#include "grasens/tensor.hpp"

namespace grasens {

// Ablation switches. A disabled part keeps tensor shapes unchanged.
struct BlockToggles {
  bool gabor = true;           // off: free 40-filter conv
  bool antialias = true;       // off: plain stride-2 subsample, no merge blur
  bool temporal_att = true;    // off: identity gate
  bool frequency_att = true;   // off: identity gate

  friend bool operator==(const BlockToggles&, const BlockToggles&) = default;
};

struct BlockConfig {
  std::size_t width = 32;          // channels carried between blocks
  std::size_t gabor_kernel = 5;
  std::size_t conv_kernel = 3;     // trailing conv after the Gabor/blur stage
  std::size_t reduction = 8;       // temporal attention MLP ratio
  BlurSpec blur{};                 // stride is set per site
  FdSpec fd{};
  BlockToggles toggles{};
  bool gabor_frozen = false;       // synthesize once, never update the quadruples

  void validate() const;
};

struct ModelConfig {
  std::size_t lambda = 8;
  std::size_t classes = 2;
  std::size_t upsample_stride = 2;
  std::uint64_t seed = 0;
  std::size_t in_channels = 1;
  std::size_t in_height = 1;
  std::size_t in_width = 1;
  bool task_blur = true;
  BlockConfig block{};

  void validate() const;  // includes the spatial-extent precondition across all blocks
};

struct NamedParameter {
  std::string name;
  Tensor value;
};

// One GraSens block: Gabor conv -> anti-aliased downsample -> conv -> FD
// attention (temporal then frequency) -> concat with anti-aliased skip ->
// low-pass -> 1x1 merge back to `width` channels.
struct GraSensBlock {
  GaborLayer gabor;
  Tensor plain_kernel;  // (40, Cb, k, k), used when the gabor toggle is off
  Tensor conv_kernel;   // (Cb, 40, k, k)
  Tensor conv_bias;     // (Cb, 1, 1)
  TemporalAttention temporal;
  FrequencyAttention frequency;
  Tensor merge_kernel;  // (Cb, 2Cb, 1, 1)
  Tensor merge_bias;    // (Cb, 1, 1)
  std::optional<FilterPredictor> inner_predictor;
  std::optional<FilterPredictor> skip_predictor;
  std::optional<FilterPredictor> merge_predictor;
};

class GraSensModel {
 public:
  explicit GraSensModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }

  // (C_in, H, W) -> logits (J). An FdTape makes repeated calls share FD constants.
  Tensor forward(const Tensor& input, FdTape* tape = nullptr) const;
  Tensor forward(const CsiTensor& input, FdTape* tape = nullptr) const;

  // Stage-level entry points.
  Tensor generation_stage(const Tensor& input) const;
  Tensor block_forward(std::size_t index, const Tensor& f1, FdTape* tape = nullptr) const;
  Tensor task_stage(const Tensor& f2) const;

  // Every tensor the model owns, in a stable order with stable names.
  std::vector<NamedParameter> named_parameters() const;
  // The subset updated by the optimizer (excludes frozen Gabor quadruples and
  // parameters of disabled components).
  std::vector<NamedParameter> trainable_parameters() const;

  const std::vector<GraSensBlock>& blocks() const { return blocks_; }

 private:
  ModelConfig config_;
  Tensor gen_kernel_;  // (C_in, width, 2s, 2s)
  Tensor gen_bias_;    // (width, 1, 1)
  std::vector<GraSensBlock> blocks_;
  Tensor task_weight_;  // (J, width)
  Tensor task_bias_;    // (J)
};

Tensor to_tensor(const CsiTensor& input);

// Softmax cross-entropy of one sample.
Tensor classification_loss(const Tensor& logits, std::size_t label);

std::size_t argmax(std::span<const double> values);

}  // namespace grasens
