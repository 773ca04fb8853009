#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "grasens/tensor.hpp"

namespace grasens {

// Differential box counting configuration.
struct FdSpec {
  std::vector<std::size_t> scales{8, 4, 2, 1};  // box sizes, strictly decreasing
  std::size_t gray_levels = 256;

  void validate() const;
};

// Fractal dimension of the value surface over a rows x cols grid.
//
// Values are min-max normalized to [0, G-1]. For each box size e the grid is
// tiled by e x e cells starting at multiples of e; a cell covers samples
// [i*e, i*e + e] on each axis (clipped to the grid), so neighbouring cells share
// their boundary sample. A cell contributes ceil(max/s) - ceil(min/s) + 1 boxes
// with s = e * G / L, where L is the smallest extent greater than one. The
// estimate is the least-squares slope of log(count) against log(1/e) over the
// scales that fit in L. A grid with a single row is treated as a 1-D profile.
//
// With fewer than two usable scales the flat-support value is returned:
// 2 for a surface, 1 for a profile.
double estimate_fd(std::span<const double> values, std::size_t rows, std::size_t cols, const FdSpec& spec);

// Box counts per usable scale, in the configured order (exposed for inspection and tests).
std::vector<double> box_counts(std::span<const double> values, std::size_t rows, std::size_t cols,
                               const FdSpec& spec, std::vector<std::size_t>* used_scales = nullptr);

// FD of each channel plane of f (C,H,W) -> detached (C).
Tensor fd_per_channel(const Tensor& f, const FdSpec& spec);
// FD of the C-length profile f[:, h, w] at every site -> detached (1,H,W).
// C < 2 yields an all-ones map and a warning on stderr.
Tensor fd_across_channels(const Tensor& f, const FdSpec& spec);

// Records FD maps on the first forward and replays them afterwards, so that
// finite-difference probes see the same constants the reverse pass treats as fixed.
class FdTape {
 public:
  enum class Mode { kRecord, kReplay };

  Tensor resolve(const std::function<Tensor()>& compute);
  void replay() {
    mode_ = Mode::kReplay;
    cursor_ = 0;
  }
  std::size_t size() const { return stored_.size(); }

 private:
  Mode mode_ = Mode::kRecord;
  std::size_t cursor_ = 0;
  std::vector<Tensor> stored_;
};

// C -> C/r -> C MLP with ReLU in between, producing a (C,1,1) gate.
struct TemporalAttention {
  Tensor w1;  // (hidden, C)
  Tensor b1;  // (hidden)
  Tensor w2;  // (C, hidden)
  Tensor b2;  // (C)
};

// Single 7x7 convolution over the 1-channel FD map.
struct FrequencyAttention {
  Tensor kernel;  // (1,1,7,7)
  Tensor bias;    // (1,1,1)
};

inline constexpr std::size_t kFrequencyAttentionKernel = 7;

TemporalAttention make_temporal_attention(std::size_t channels, std::size_t reduction, std::uint64_t seed);
FrequencyAttention make_frequency_attention(std::uint64_t seed);

// sigmoid(MLP(FD per channel)) -> (C,1,1)
Tensor temporal_attention(const Tensor& f, const TemporalAttention& att, const FdSpec& spec, FdTape* tape = nullptr);
// sigmoid(conv7x7(reflect-padded FD-across-channels map)) -> (1,H,W)
Tensor frequency_attention(const Tensor& f, const FrequencyAttention& att, const FdSpec& spec,
                           FdTape* tape = nullptr);

// f' = M_t(f) * f, then f'' = M_f(f') * f'.
Tensor apply_attention(const Tensor& f, const TemporalAttention& att_t, const FrequencyAttention& att_f,
                       const FdSpec& spec, FdTape* tape = nullptr);

}  // namespace grasens
