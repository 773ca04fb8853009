#include "grasens/fractal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <random>

#include "grasens/errors.hpp"
#include "grasens/ops.hpp"

namespace grasens {

void FdSpec::validate() const {
  if (scales.size() < 2) throw ConfigError("FD configuration needs at least two scales");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] < 1) throw ConfigError("FD scales must be >= 1");
    if (i > 0 && scales[i] >= scales[i - 1]) throw ConfigError("FD scales must be strictly decreasing");
  }
  if (gray_levels < 2) throw ConfigError("FD gray level count must be at least 2");
}

namespace {

std::size_t effective_extent(std::size_t rows, std::size_t cols) {
  if (rows > 1 && cols > 1) return std::min(rows, cols);
  return std::max(rows, cols);
}

}  // namespace

std::vector<double> box_counts(std::span<const double> values, std::size_t rows, std::size_t cols,
                               const FdSpec& spec, std::vector<std::size_t>* used_scales) {
  spec.validate();
  if (rows == 0 || cols == 0 || values.size() != rows * cols) {
    throw ConfigError("box_counts: " + std::to_string(values.size()) + " values for a " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " grid");
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, range = *hi_it - *lo_it;
  const double top = static_cast<double>(spec.gray_levels - 1);
  std::vector<double> z(values.size(), 0.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) z[i] = (values[i] - lo) / range * top;
  }

  const std::size_t extent = effective_extent(rows, cols);
  const double levels = static_cast<double>(spec.gray_levels);
  std::vector<double> counts;
  if (used_scales) used_scales->clear();
  for (std::size_t eps : spec.scales) {
    if (eps > extent) continue;
    const double box = static_cast<double>(eps) * levels / static_cast<double>(extent);
    double total = 0.0;
    for (std::size_t r0 = 0; r0 < rows; r0 += eps) {
      const std::size_t r1 = std::min(r0 + eps, rows - 1);
      for (std::size_t c0 = 0; c0 < cols; c0 += eps) {
        const std::size_t c1 = std::min(c0 + eps, cols - 1);
        double cmin = z[r0 * cols + c0], cmax = cmin;
        for (std::size_t r = r0; r <= r1; ++r) {
          for (std::size_t c = c0; c <= c1; ++c) {
            cmin = std::min(cmin, z[r * cols + c]);
            cmax = std::max(cmax, z[r * cols + c]);
          }
        }
        total += std::ceil(cmax / box) - std::ceil(cmin / box) + 1.0;
      }
    }
    counts.push_back(total);
    if (used_scales) used_scales->push_back(eps);
  }
  return counts;
}

double estimate_fd(std::span<const double> values, std::size_t rows, std::size_t cols, const FdSpec& spec) {
  std::vector<std::size_t> scales;
  const std::vector<double> counts = box_counts(values, rows, cols, spec, &scales);
  if (counts.size() < 2) return (rows > 1 && cols > 1) || (rows == 1 && cols == 1) ? 2.0 : 1.0;

  // Least-squares slope of log(count) on log(1/eps).
  const auto n = static_cast<double>(counts.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    sx += -std::log(static_cast<double>(scales[i]));
    sy += std::log(counts[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double dx = -std::log(static_cast<double>(scales[i])) - mx;
    sxy += dx * (std::log(counts[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

Tensor fd_per_channel(const Tensor& f, const FdSpec& spec) {
  if (f.rank() != 3) throw ConfigError("fd_per_channel expects (C,H,W), got " + to_string(f.shape()));
  const std::size_t c = f.dim(0), h = f.dim(1), w = f.dim(2);
  std::vector<double> out(c);
  for (std::size_t ch = 0; ch < c; ++ch) out[ch] = estimate_fd(f.data().subspan(ch * h * w, h * w), h, w, spec);
  return Tensor::from_data({c}, std::move(out));
}

Tensor fd_across_channels(const Tensor& f, const FdSpec& spec) {
  if (f.rank() != 3) throw ConfigError("fd_across_channels expects (C,H,W), got " + to_string(f.shape()));
  const std::size_t c = f.dim(0), h = f.dim(1), w = f.dim(2);
  if (c < 2) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
      std::cerr << "warning: frequency attention on a single-channel map; using an all-ones FD map\n";
    }
    return Tensor::full({1, h, w}, 1.0);
  }
  std::vector<double> out(h * w);
  std::vector<double> profile(c);
  auto fd = f.data();
  for (std::size_t i = 0; i < h * w; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) profile[ch] = fd[ch * h * w + i];
    out[i] = estimate_fd(profile, 1, c, spec);
  }
  return Tensor::from_data({1, h, w}, std::move(out));
}

Tensor FdTape::resolve(const std::function<Tensor()>& compute) {
  if (mode_ == Mode::kRecord) {
    stored_.push_back(compute());
    return stored_.back();
  }
  if (cursor_ >= stored_.size()) throw UsageError("FdTape replay ran past the recorded maps");
  return stored_[cursor_++];
}

namespace {

Tensor random_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from_data(std::move(shape), std::move(v), true);
}

}  // namespace

TemporalAttention make_temporal_attention(std::size_t channels, std::size_t reduction, std::uint64_t seed) {
  if (channels == 0 || reduction == 0) throw ConfigError("temporal attention needs positive channels and reduction");
  const std::size_t hidden = std::max<std::size_t>(1, channels / reduction);
  std::mt19937_64 rng(seed);
  return {random_tensor({hidden, channels}, std::sqrt(2.0 / static_cast<double>(channels)), rng),
          Tensor::zeros({hidden}, true),
          random_tensor({channels, hidden}, std::sqrt(1.0 / static_cast<double>(hidden)), rng),
          Tensor::zeros({channels}, true)};
}

FrequencyAttention make_frequency_attention(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  constexpr std::size_t k = kFrequencyAttentionKernel;
  return {random_tensor({1, 1, k, k}, 1.0 / static_cast<double>(k * k), rng), Tensor::zeros({1, 1, 1}, true)};
}

Tensor temporal_attention(const Tensor& f, const TemporalAttention& att, const FdSpec& spec, FdTape* tape) {
  const std::size_t c = f.dim(0);
  if (att.w1.dim(1) != c) {
    throw ConfigError("temporal attention built for " + std::to_string(att.w1.dim(1)) + " channels, input has " +
                      std::to_string(c));
  }
  auto compute = [&] { return fd_per_channel(f, spec); };
  const Tensor fd = stop_gradient(tape ? tape->resolve(compute) : compute());
  const Tensor hidden = relu(linear(fd, att.w1, att.b1));
  return sigmoid(reshape(linear(hidden, att.w2, att.b2), {c, 1, 1}));
}

Tensor frequency_attention(const Tensor& f, const FrequencyAttention& att, const FdSpec& spec, FdTape* tape) {
  auto compute = [&] { return fd_across_channels(f, spec); };
  const Tensor fd = stop_gradient(tape ? tape->resolve(compute) : compute());
  constexpr std::size_t pad = kFrequencyAttentionKernel / 2;
  return sigmoid(add(conv2d(pad_reflect(fd, pad), att.kernel, 1, 0), att.bias));
}

Tensor apply_attention(const Tensor& f, const TemporalAttention& att_t, const FrequencyAttention& att_f,
                       const FdSpec& spec, FdTape* tape) {
  const Tensor f1 = mul(temporal_attention(f, att_t, spec, tape), f);
  return mul(frequency_attention(f1, att_f, spec, tape), f1);
}

}  // namespace grasens
