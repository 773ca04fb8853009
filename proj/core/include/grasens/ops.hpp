#pragma once

#include <cstddef>
#include <span>

#include "grasens/tensor.hpp"

// Differentiable operations over Tensor. Feature maps are (C, H, W); every
// convolution is a cross-correlation (no kernel flip).
namespace grasens {

// input (C_in,H,W), kernels (C_out,C_in,k,k) -> (C_out,H',W'), zero padding.
Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t stride = 1, std::size_t padding = 0);

// Transposed convolution with kernel size 2*stride: input (C_in,H,W),
// kernels (C_in,C_out,2s,2s) -> (C_out,H*s,W*s). Exactly the adjoint of
// conv2d(., kernels^T, stride, stride/2).
Tensor deconv2d(const Tensor& input, const Tensor& kernels, std::size_t stride);

// Broadcasting: equal shapes, or rank-3 operands where one side is (C,1,1) or (1,H,W).
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count);

// input (N), weights (M,N), bias (M) -> (M).
Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias);

// Same values, no gradient flows back through it.
Tensor stop_gradient(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);

// (C,H,W) -> (C)
Tensor global_avg_pool(const Tensor& x);

// Mirror padding without edge repeat; extents smaller than the pad keep folding back.
Tensor pad_reflect(const Tensor& x, std::size_t pad);

// Per-channel valid filtering with a fixed (k,k) kernel that takes no gradient.
Tensor depthwise_filter(const Tensor& x, std::span<const double> kernel, std::size_t k);

// Keeps rows/cols 0, s, 2s, ...; output extent ceil(H/s).
Tensor subsample(const Tensor& x, std::size_t stride);

// x (G*K,H,W): softmax along the K channels of each group at every location.
Tensor softmax_groups(const Tensor& x, std::size_t group_size);

// Spatially varying filter. padded (C,H+2p,W+2p), filters (G*k*k,H,W) with
// p = k/2 and C divisible by G; channel c uses group c / (C/G).
Tensor local_filter(const Tensor& padded, const Tensor& filters, std::size_t k, std::size_t groups);

// 1-D smoothing of a vector with odd-length taps and edge replication.
Tensor smooth1d(const Tensor& x, std::span<const double> taps);

// Softmax over logits (J) followed by negative log-likelihood of `label`.
Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label);

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);

}  // namespace grasens
