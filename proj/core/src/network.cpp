#include "grasens/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "grasens/errors.hpp"
#include "grasens/ops.hpp"

namespace grasens {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t base, std::uint64_t stream) { return splitmix64(base ^ splitmix64(stream)); }

Tensor normal_init(Shape shape, double stddev, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from_data(std::move(shape), std::move(v), true);
}

constexpr double kTaskBlur[3] = {0.25, 0.5, 0.25};

}  // namespace

void BlockConfig::validate() const {
  if (width < 1) throw ConfigError("block width must be at least 1");
  if (gabor_kernel % 2 == 0) throw ConfigError("gabor kernel size must be odd");
  if (conv_kernel % 2 == 0) throw ConfigError("block conv kernel size must be odd");
  if (reduction < 1) throw ConfigError("attention reduction ratio must be at least 1");
  blur.validate();
  fd.validate();
  if (blur.mode == BlurMode::kPredicted) {
    for (std::size_t channels : {kGaborFilters, width, 2 * width}) {
      if (channels % blur.groups != 0) {
        throw ConfigError("predicted blur groups (" + std::to_string(blur.groups) + ") must divide " +
                          std::to_string(channels) + " channels");
      }
    }
  }
}

void ModelConfig::validate() const {
  if (lambda < 1) throw ConfigError("lambda (block count) must be at least 1");
  if (classes < 1) throw ConfigError("class count must be at least 1");
  if (upsample_stride < 1) throw ConfigError("upsample stride must be at least 1");
  if (in_channels < 1 || in_height < 1 || in_width < 1) throw ConfigError("input extents must be positive");
  block.validate();
  std::size_t h = in_height * upsample_stride, w = in_width * upsample_stride;
  for (std::size_t mu = 1; mu <= lambda; ++mu) {
    if (h < 2 || w < 2) {
      throw ConfigError("block " + std::to_string(mu) + " of " + std::to_string(lambda) + " would receive a " +
                        std::to_string(h) + "x" + std::to_string(w) +
                        " map and cannot downsample it; use a smaller lambda or a larger input (input " +
                        std::to_string(in_height) + "x" + std::to_string(in_width) + ")");
    }
    h = (h + 1) / 2;
    w = (w + 1) / 2;
  }
}

GraSensModel::GraSensModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t cb = config_.block.width;
  const std::size_t s = config_.upsample_stride;
  const std::uint64_t seed = config_.seed;

  gen_kernel_ = normal_init({config_.in_channels, cb, 2 * s, 2 * s},
                            std::sqrt(1.0 / static_cast<double>(config_.in_channels * 4)), sub_seed(seed, 1));
  gen_bias_ = Tensor::zeros({cb, 1, 1}, true);

  const BlockConfig& bc = config_.block;
  const std::size_t kg = bc.gabor_kernel, kc = bc.conv_kernel;
  for (std::size_t mu = 0; mu < config_.lambda; ++mu) {
    const std::uint64_t bs = sub_seed(seed, 100 + mu);
    GraSensBlock b;
    b.gabor = init_grid(cb, kg, sub_seed(bs, 1), !bc.gabor_frozen);
    b.plain_kernel = normal_init({kGaborFilters, cb, kg, kg}, std::sqrt(2.0 / static_cast<double>(cb * kg * kg)),
                                 sub_seed(bs, 2));
    b.conv_kernel = normal_init({cb, kGaborFilters, kc, kc},
                                std::sqrt(2.0 / static_cast<double>(kGaborFilters * kc * kc)), sub_seed(bs, 3));
    b.conv_bias = Tensor::zeros({cb, 1, 1}, true);
    b.temporal = make_temporal_attention(cb, bc.reduction, sub_seed(bs, 4));
    b.frequency = make_frequency_attention(sub_seed(bs, 5));
    b.merge_kernel = normal_init({cb, 2 * cb, 1, 1}, std::sqrt(2.0 / static_cast<double>(2 * cb)), sub_seed(bs, 6));
    b.merge_bias = Tensor::zeros({cb, 1, 1}, true);
    if (bc.blur.mode == BlurMode::kPredicted) {
      b.inner_predictor = make_filter_predictor(kGaborFilters, bc.blur);
      b.skip_predictor = make_filter_predictor(cb, bc.blur);
      b.merge_predictor = make_filter_predictor(2 * cb, bc.blur);
    }
    blocks_.push_back(std::move(b));
  }

  task_weight_ = normal_init({config_.classes, cb}, std::sqrt(1.0 / static_cast<double>(cb)), sub_seed(seed, 2));
  task_bias_ = Tensor::zeros({config_.classes}, true);
}

Tensor to_tensor(const CsiTensor& input) {
  return Tensor::from_data({input.channels, input.height, input.width}, input.data);
}

Tensor GraSensModel::generation_stage(const Tensor& input) const {
  if (input.rank() != 3 || input.dim(0) != config_.in_channels || input.dim(1) != config_.in_height ||
      input.dim(2) != config_.in_width) {
    throw ConfigError("model expects input (" + std::to_string(config_.in_channels) + "," +
                      std::to_string(config_.in_height) + "," + std::to_string(config_.in_width) + "), got " +
                      to_string(input.shape()));
  }
  return add(deconv2d(input, gen_kernel_, config_.upsample_stride), gen_bias_);
}

Tensor GraSensModel::block_forward(std::size_t index, const Tensor& f1, FdTape* tape) const {
  const GraSensBlock& b = blocks_.at(index);
  const BlockConfig& bc = config_.block;
  if (f1.rank() != 3 || f1.dim(1) < 2 || f1.dim(2) < 2) {
    throw ConfigError("block " + std::to_string(index + 1) + " needs a map of at least 2x2 to downsample, got " +
                      to_string(f1.shape()) + "; use a smaller lambda or a larger input");
  }
  BlurSpec down = bc.blur;
  down.stride = 2;
  BlurSpec smooth = bc.blur;
  smooth.stride = 1;
  auto predictor = [](const std::optional<FilterPredictor>& p) { return p ? &*p : nullptr; };

  // Fixed fan-in gain: Gabor kernels peak at 1, so the raw response grows with C*k*k.
  const double gabor_gain = 1.0 / std::sqrt(static_cast<double>(f1.dim(0) * bc.gabor_kernel * bc.gabor_kernel));
  const Tensor g = bc.toggles.gabor ? scale(gabor_conv(f1, b.gabor), gabor_gain)
                                    : conv2d(f1, b.plain_kernel, 1, bc.gabor_kernel / 2);
  const Tensor d = bc.toggles.antialias ? blur(g, down, predictor(b.inner_predictor)) : subsample(g, 2);
  const Tensor f0 = relu(add(conv2d(d, b.conv_kernel, 1, bc.conv_kernel / 2), b.conv_bias));

  Tensor att = f0;
  if (bc.toggles.temporal_att) att = mul(temporal_attention(att, b.temporal, bc.fd, tape), att);
  if (bc.toggles.frequency_att) att = mul(frequency_attention(att, b.frequency, bc.fd, tape), att);

  const Tensor skip = bc.toggles.antialias ? blur(f1, down, predictor(b.skip_predictor)) : subsample(f1, 2);
  Tensor merged = concat_channels(att, skip);
  if (bc.toggles.antialias) merged = blur(merged, smooth, predictor(b.merge_predictor));
  return add(conv2d(merged, b.merge_kernel, 1, 0), b.merge_bias);
}

Tensor GraSensModel::task_stage(const Tensor& f2) const {
  const Tensor logits = linear(global_avg_pool(f2), task_weight_, task_bias_);
  return config_.task_blur ? smooth1d(logits, kTaskBlur) : logits;
}

Tensor GraSensModel::forward(const Tensor& input, FdTape* tape) const {
  Tensor f = generation_stage(input);
  for (std::size_t mu = 0; mu < blocks_.size(); ++mu) f = block_forward(mu, f, tape);
  return task_stage(f);
}

Tensor GraSensModel::forward(const CsiTensor& input, FdTape* tape) const { return forward(to_tensor(input), tape); }

std::vector<NamedParameter> GraSensModel::named_parameters() const {
  std::vector<NamedParameter> out{{"gen.kernel", gen_kernel_}, {"gen.bias", gen_bias_}};
  for (std::size_t mu = 0; mu < blocks_.size(); ++mu) {
    const GraSensBlock& b = blocks_[mu];
    const std::string p = "block" + std::to_string(mu) + ".";
    out.push_back({p + "gabor.omega", b.gabor.omega});
    out.push_back({p + "gabor.theta", b.gabor.theta});
    out.push_back({p + "gabor.psi", b.gabor.psi});
    out.push_back({p + "gabor.sigma", b.gabor.sigma});
    out.push_back({p + "plain.kernel", b.plain_kernel});
    out.push_back({p + "conv.kernel", b.conv_kernel});
    out.push_back({p + "conv.bias", b.conv_bias});
    out.push_back({p + "temporal.w1", b.temporal.w1});
    out.push_back({p + "temporal.b1", b.temporal.b1});
    out.push_back({p + "temporal.w2", b.temporal.w2});
    out.push_back({p + "temporal.b2", b.temporal.b2});
    out.push_back({p + "frequency.kernel", b.frequency.kernel});
    out.push_back({p + "frequency.bias", b.frequency.bias});
    out.push_back({p + "merge.kernel", b.merge_kernel});
    out.push_back({p + "merge.bias", b.merge_bias});
    auto add_predictor = [&](const std::optional<FilterPredictor>& pred, const std::string& name) {
      if (!pred) return;
      out.push_back({p + name + ".weights", pred->weights});
      out.push_back({p + name + ".bias", pred->bias});
    };
    add_predictor(b.inner_predictor, "inner_blur");
    add_predictor(b.skip_predictor, "skip_blur");
    add_predictor(b.merge_predictor, "merge_blur");
  }
  out.push_back({"task.weight", task_weight_});
  out.push_back({"task.bias", task_bias_});
  return out;
}

std::vector<NamedParameter> GraSensModel::trainable_parameters() const {
  const BlockToggles& t = config_.block.toggles;
  std::vector<NamedParameter> out;
  for (auto& p : named_parameters()) {
    const auto has = [&](const char* part) { return p.name.find(part) != std::string::npos; };
    if (!p.value.requires_grad()) continue;
    if (has(".gabor.") && !t.gabor) continue;
    if (has(".plain.") && t.gabor) continue;
    if (has(".temporal.") && !t.temporal_att) continue;
    if (has(".frequency.") && !t.frequency_att) continue;
    if (has("_blur.") && !t.antialias) continue;
    out.push_back(std::move(p));
  }
  return out;
}

Tensor classification_loss(const Tensor& logits, std::size_t label) { return softmax_cross_entropy(logits, label); }

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::distance(values.begin(), std::max_element(values.begin(), values.end())));
}

}  // namespace grasens
