#include "grasens/antialias.hpp"

#include <cmath>

#include "grasens/errors.hpp"
#include "grasens/ops.hpp"

namespace grasens {

void BlurSpec::validate() const {
  if (kernel_size == 0 || kernel_size % 2 == 0) {
    throw ConfigError("blur kernel size must be odd, got " + std::to_string(kernel_size));
  }
  if (stride == 0) throw ConfigError("blur stride must be positive");
  if (groups == 0) throw ConfigError("blur group count must be positive");
}

std::vector<double> binomial_kernel(std::size_t k) {
  if (k == 0 || k % 2 == 0) throw ConfigError("binomial kernel size must be odd");
  std::vector<double> row(k, 0.0);
  row[0] = 1.0;
  for (std::size_t i = 1; i < k; ++i) {
    for (std::size_t j = i; j > 0; --j) row[j] += row[j - 1];
  }
  double total = 0.0;
  for (double v : row) total += v;
  std::vector<double> kernel(k * k);
  for (std::size_t y = 0; y < k; ++y) {
    for (std::size_t x = 0; x < k; ++x) kernel[y * k + x] = row[y] * row[x] / (total * total);
  }
  return kernel;
}

FilterPredictor make_filter_predictor(std::size_t channels, const BlurSpec& spec) {
  spec.validate();
  const std::size_t outputs = spec.groups * spec.kernel_size * spec.kernel_size;
  return {Tensor::zeros({outputs, channels, 1, 1}, true), Tensor::zeros({outputs, 1, 1}, true)};
}

Tensor predict_filters(const Tensor& input, const FilterPredictor& predictor, const BlurSpec& spec) {
  spec.validate();
  if (input.dim(0) % spec.groups != 0) {
    throw ConfigError("predicted blur: " + std::to_string(input.dim(0)) + " channels do not split into " +
                      std::to_string(spec.groups) + " groups");
  }
  const Tensor logits = add(conv2d(input, predictor.weights, 1, 0), predictor.bias);
  return softmax_groups(logits, spec.kernel_size * spec.kernel_size);
}

Tensor blur(const Tensor& input, const BlurSpec& spec, const FilterPredictor* predictor) {
  spec.validate();
  if (input.rank() != 3) throw ConfigError("blur expects (C,H,W), got " + to_string(input.shape()));
  const std::size_t k = spec.kernel_size;
  const Tensor padded = pad_reflect(input, k / 2);
  Tensor filtered;
  if (spec.mode == BlurMode::kFixedBinomial) {
    filtered = depthwise_filter(padded, binomial_kernel(k), k);
  } else {
    if (predictor == nullptr) throw ConfigError("predicted blur mode needs a filter predictor");
    filtered = local_filter(padded, predict_filters(input, *predictor, spec), k, spec.groups);
  }
  return spec.stride == 1 ? filtered : subsample(filtered, spec.stride);
}

Tensor shift_width(const Tensor& x, std::ptrdiff_t shift) {
  if (x.rank() != 3) throw ConfigError("shift_width expects (C,H,W)");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  std::vector<double> out(x.numel());
  auto xd = x.data();
  const auto sw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t row = 0; row < c * h; ++row) {
    for (std::size_t j = 0; j < w; ++j) {
      std::ptrdiff_t src = (static_cast<std::ptrdiff_t>(j) - shift) % sw;
      if (src < 0) src += sw;
      out[row * w + j] = xd[row * w + static_cast<std::size_t>(src)];
    }
  }
  return Tensor::from_data(x.shape(), std::move(out));
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ConfigError("cosine_similarity: shape mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    dot += a.data()[i] * b.data()[i];
    na += a.data()[i] * a.data()[i];
    nb += b.data()[i] * b.data()[i];
  }
  if (na == 0.0 || nb == 0.0) return na == nb ? 1.0 : 0.0;
  return dot / std::sqrt(na * nb);
}

double shift_consistency(const Tensor& x, const std::function<Tensor(const Tensor&)>& downsample,
                         std::ptrdiff_t shift) {
  return cosine_similarity(downsample(shift_width(x, shift)), shift_width(downsample(x), shift));
}

}  // namespace grasens
