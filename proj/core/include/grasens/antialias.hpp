#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "grasens/tensor.hpp"

namespace grasens {

enum class BlurMode { kFixedBinomial, kPredicted };

struct BlurSpec {
  std::size_t kernel_size = 3;  // odd
  std::size_t stride = 1;       // 1 = low-pass only, 2 = anti-aliased downsample
  BlurMode mode = BlurMode::kFixedBinomial;
  std::size_t groups = 1;  // channel groups sharing one predicted filter field

  void validate() const;
};

// Normalized outer product of the binomial row; k = 3 gives [[1,2,1],[2,4,2],[1,2,1]] / 16.
std::vector<double> binomial_kernel(std::size_t k);

// 1x1 convolution emitting groups*k*k logits per location.
struct FilterPredictor {
  Tensor weights;  // (groups*k*k, C, 1, 1)
  Tensor bias;     // (groups*k*k, 1, 1)
};

// Zero-initialized predictor: uniform filters until trained.
FilterPredictor make_filter_predictor(std::size_t channels, const BlurSpec& spec);

// Per-location low-pass filter field, (groups*k*k, H, W); non-negative, each
// group's k*k weights sum to 1 at every location.
Tensor predict_filters(const Tensor& input, const FilterPredictor& predictor, const BlurSpec& spec);

// Depthwise low-pass filtering with reflect padding followed by subsampling:
// output extent ceil(H / stride). Predicted mode requires a predictor.
Tensor blur(const Tensor& input, const BlurSpec& spec, const FilterPredictor* predictor = nullptr);

// Circular shift along the width (time) axis.
Tensor shift_width(const Tensor& x, std::ptrdiff_t shift);

double cosine_similarity(const Tensor& a, const Tensor& b);

// cos(D(shift(x)), shift(D(x))) for a downsampling operator D.
double shift_consistency(const Tensor& x, const std::function<Tensor(const Tensor&)>& downsample,
                         std::ptrdiff_t shift = 1);

}  // namespace grasens
