#pragma once

#include <cstddef>
#include <cstdint>

#include "grasens/tensor.hpp"

namespace grasens {

// Real Gabor kernel parameters:
//   g(x, y) = exp(-(x'^2 + y'^2) / (2 sigma^2)) * cos(omega x' + psi)
//   x' =  x cos(theta) + y sin(theta)
//   y' = -x sin(theta) + y cos(theta)
// with (x, y) integer offsets from the kernel centre (x along columns, y along rows).
struct GaborParams {
  double omega = 1.0;  // radians per pixel
  double theta = 0.0;  // orientation, radians
  double psi = 0.0;    // phase offset, radians
  double sigma = 1.0;  // envelope width, pixels
};

inline constexpr std::size_t kGaborFrequencies = 5;
inline constexpr std::size_t kGaborOrientations = 8;
inline constexpr std::size_t kGaborFilters = kGaborFrequencies * kGaborOrientations;
inline constexpr double kMinGaborSigma = 1e-3;

// omega_n = (pi/2) * sqrt(2)^-(n-1), n = 1..5
double gabor_frequency(std::size_t n);
// theta_m = (pi/8) * (m-1), m = 1..8
double gabor_orientation(std::size_t m);

// Differentiable bank synthesis. The four parameter tensors share one shape S;
// the result has shape S + (k, k). Sigma below kMinGaborSigma is clamped and
// receives zero gradient.
Tensor gabor_bank(const Tensor& omega, const Tensor& theta, const Tensor& psi, const Tensor& sigma,
                  std::size_t kernel_size);

// Single (k, k) kernel from plain parameters.
Tensor synthesize_kernel(const GaborParams& p, std::size_t kernel_size);

// One trainable quadruple per (output filter, input channel); each parameter tensor is (C_out, C_in).
struct GaborLayer {
  Tensor omega;
  Tensor theta;
  Tensor psi;
  Tensor sigma;
  std::size_t kernel_size = 5;

  std::size_t out_channels() const { return omega.dim(0); }
  std::size_t in_channels() const { return omega.dim(1); }
  GaborParams params(std::size_t out, std::size_t in) const;
  Tensor kernels() const;  // (C_out, C_in, k, k)
};

// 40 filters: filter f = 8*(n-1) + (m-1) carries (omega_n, theta_m), sigma = pi/omega_n,
// psi ~ U(0, pi) drawn per (filter, input channel) from `seed`.
GaborLayer init_grid(std::size_t c_in, std::size_t kernel_size, std::uint64_t seed, bool trainable = true);

// Stride-1 "same" cross-correlation with kernels synthesized from the current parameters.
Tensor gabor_conv(const Tensor& input, const GaborLayer& layer);

}  // namespace grasens
