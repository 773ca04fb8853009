#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "grasens/network.hpp"

namespace grasens {

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

// Classic momentum on flat arrays: v <- momentum*v + grad; p <- p - lr*v.
void sgd_momentum_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
                       const TrainConfig& cfg);

// Momentum buffers kept per parameter, in the order the parameters are passed.
class SgdMomentum {
 public:
  explicit SgdMomentum(TrainConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  void step(std::vector<NamedParameter>& params);
  void zero_grad(std::vector<NamedParameter>& params) const;

  const std::vector<std::vector<double>>& velocity() const { return velocity_; }
  void set_velocity(std::vector<std::vector<double>> v) { velocity_ = std::move(v); }
  const TrainConfig& config() const { return cfg_; }

 private:
  TrainConfig cfg_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace grasens
