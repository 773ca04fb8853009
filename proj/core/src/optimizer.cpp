#include "grasens/optimizer.hpp"

#include "grasens/errors.hpp"

namespace grasens {

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
}

void sgd_momentum_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
                       const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw ConfigError("sgd_momentum_step: parameter, gradient and velocity sizes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = cfg.momentum * velocity[i] + grads[i];
    params[i] -= cfg.lr * velocity[i];
  }
}

void SgdMomentum::step(std::vector<NamedParameter>& params) {
  if (velocity_.empty()) {
    for (const auto& p : params) velocity_.emplace_back(p.value.numel(), 0.0);
  }
  if (velocity_.size() != params.size()) throw ConfigError("optimizer state does not match the parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (velocity_[i].size() != params[i].value.numel()) {
      throw ConfigError("optimizer state for " + params[i].name + " has the wrong size");
    }
    const std::vector<double> g = params[i].value.grad();
    sgd_momentum_step(params[i].value.mutable_data(), g, velocity_[i], cfg_);
  }
}

void SgdMomentum::zero_grad(std::vector<NamedParameter>& params) const {
  for (auto& p : params) p.value.zero_grad();
}

}  // namespace grasens
