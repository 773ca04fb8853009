#include "grasens/gabor.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "grasens/errors.hpp"
#include "grasens/ops.hpp"

namespace grasens {

double gabor_frequency(std::size_t n) {
  if (n < 1 || n > kGaborFrequencies) throw ConfigError("gabor frequency index must be in 1..5");
  return (std::numbers::pi / 2.0) * std::pow(std::numbers::sqrt2, -static_cast<double>(n - 1));
}

double gabor_orientation(std::size_t m) {
  if (m < 1 || m > kGaborOrientations) throw ConfigError("gabor orientation index must be in 1..8");
  return (std::numbers::pi / 8.0) * static_cast<double>(m - 1);
}

Tensor gabor_bank(const Tensor& omega, const Tensor& theta, const Tensor& psi, const Tensor& sigma,
                  std::size_t kernel_size) {
  if (kernel_size % 2 == 0) throw ConfigError("gabor kernel size must be odd, got " + std::to_string(kernel_size));
  if (theta.shape() != omega.shape() || psi.shape() != omega.shape() || sigma.shape() != omega.shape()) {
    throw ConfigError("gabor parameter tensors must share one shape");
  }
  const std::size_t k = kernel_size, kk = k * k, count = omega.numel();
  const auto half = static_cast<std::ptrdiff_t>(k / 2);
  Shape out_shape = omega.shape();
  out_shape.push_back(k);
  out_shape.push_back(k);

  auto om = omega.data(), th = theta.data(), ps = psi.data(), sg = sigma.data();
  std::vector<double> out(count * kk);
  for (std::size_t f = 0; f < count; ++f) {
    const double s = std::max(sg[f], kMinGaborSigma);
    const double c = std::cos(th[f]), sn = std::sin(th[f]);
    for (std::ptrdiff_t y = -half; y <= half; ++y) {
      for (std::ptrdiff_t x = -half; x <= half; ++x) {
        const double xr = static_cast<double>(x) * c + static_cast<double>(y) * sn;
        const double yr = -static_cast<double>(x) * sn + static_cast<double>(y) * c;
        const double env = std::exp(-(xr * xr + yr * yr) / (2.0 * s * s));
        out[f * kk + static_cast<std::size_t>((y + half) * static_cast<std::ptrdiff_t>(k) + (x + half))] =
            env * std::cos(om[f] * xr + ps[f]);
      }
    }
  }

  return make_result("gabor_bank", std::move(out_shape), std::move(out), {omega, theta, psi, sigma},
                     [count, k, kk, half](detail::Node& self) {
                       auto& n_om = *self.parents[0];
                       auto& n_th = *self.parents[1];
                       auto& n_ps = *self.parents[2];
                       auto& n_sg = *self.parents[3];
                       double* g_om = n_om.requires_grad ? n_om.ensure_grad().data() : nullptr;
                       double* g_th = n_th.requires_grad ? n_th.ensure_grad().data() : nullptr;
                       double* g_ps = n_ps.requires_grad ? n_ps.ensure_grad().data() : nullptr;
                       double* g_sg = n_sg.requires_grad ? n_sg.ensure_grad().data() : nullptr;
                       for (std::size_t f = 0; f < count; ++f) {
                         const double raw_sigma = n_sg.data[f];
                         const bool clamped = raw_sigma < kMinGaborSigma;
                         const double s = clamped ? kMinGaborSigma : raw_sigma;
                         const double om = n_om.data[f], ps = n_ps.data[f];
                         const double c = std::cos(n_th.data[f]), sn = std::sin(n_th.data[f]);
                         double d_om = 0, d_th = 0, d_ps = 0, d_sg = 0;
                         for (std::ptrdiff_t y = -half; y <= half; ++y) {
                           for (std::ptrdiff_t x = -half; x <= half; ++x) {
                             const double g = self.grad[f * kk + static_cast<std::size_t>(
                                                                     (y + half) * static_cast<std::ptrdiff_t>(k) +
                                                                     (x + half))];
                             if (g == 0.0) continue;
                             const double xr = static_cast<double>(x) * c + static_cast<double>(y) * sn;
                             const double yr = -static_cast<double>(x) * sn + static_cast<double>(y) * c;
                             const double r2 = xr * xr + yr * yr;
                             const double env = std::exp(-r2 / (2.0 * s * s));
                             const double arg = om * xr + ps;
                             const double cs = std::cos(arg), sin_arg = std::sin(arg);
                             // The envelope is isotropic, so theta only enters through the carrier.
                             d_om += g * (-env * sin_arg * xr);
                             d_th += g * (-env * sin_arg * om * yr);
                             d_ps += g * (-env * sin_arg);
                             if (!clamped) d_sg += g * env * cs * r2 / (s * s * s);
                           }
                         }
                         if (g_om) g_om[f] += d_om;
                         if (g_th) g_th[f] += d_th;
                         if (g_ps) g_ps[f] += d_ps;
                         if (g_sg) g_sg[f] += d_sg;
                       }
                     });
}

Tensor synthesize_kernel(const GaborParams& p, std::size_t kernel_size) {
  return gabor_bank(Tensor::scalar(p.omega), Tensor::scalar(p.theta), Tensor::scalar(p.psi), Tensor::scalar(p.sigma),
                    kernel_size);
}

GaborParams GaborLayer::params(std::size_t out, std::size_t in) const {
  const std::size_t i = out * in_channels() + in;
  return {omega.data()[i], theta.data()[i], psi.data()[i], sigma.data()[i]};
}

Tensor GaborLayer::kernels() const { return gabor_bank(omega, theta, psi, sigma, kernel_size); }

GaborLayer init_grid(std::size_t c_in, std::size_t kernel_size, std::uint64_t seed, bool trainable) {
  if (kernel_size % 2 == 0) throw ConfigError("gabor kernel size must be odd, got " + std::to_string(kernel_size));
  if (c_in == 0) throw ConfigError("gabor layer needs at least one input channel");
  const std::size_t n = kGaborFilters * c_in;
  std::vector<double> om(n), th(n), ps(n), sg(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, std::numbers::pi);
  for (std::size_t f = 0; f < kGaborFilters; ++f) {
    const double omega = gabor_frequency(f / kGaborOrientations + 1);
    const double theta = gabor_orientation(f % kGaborOrientations + 1);
    for (std::size_t c = 0; c < c_in; ++c) {
      const std::size_t i = f * c_in + c;
      om[i] = omega;
      th[i] = theta;
      sg[i] = std::numbers::pi / omega;
      ps[i] = phase(rng);
    }
  }
  const Shape shape{kGaborFilters, c_in};
  return GaborLayer{Tensor::from_data(shape, std::move(om), trainable), Tensor::from_data(shape, std::move(th), trainable),
                    Tensor::from_data(shape, std::move(ps), trainable), Tensor::from_data(shape, std::move(sg), trainable),
                    kernel_size};
}

Tensor gabor_conv(const Tensor& input, const GaborLayer& layer) {
  if (input.rank() != 3 || input.dim(0) != layer.in_channels()) {
    throw ConfigError("gabor_conv: input " + to_string(input.shape()) + " does not match a layer with " +
                      std::to_string(layer.in_channels()) + " input channels");
  }
  return conv2d(input, layer.kernels(), 1, (layer.kernel_size - 1) / 2);
}

}  // namespace grasens
