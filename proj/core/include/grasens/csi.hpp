#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace grasens {

using Complex = std::complex<double>;
using ComplexF = std::complex<float>;

struct CsiGeometry {
  std::uint16_t n_tx = 1;
  std::uint16_t n_rx = 1;
  std::uint16_t n_sub = 1;
  std::uint32_t sample_rate_hz = 100;

  // Complex values per packet, N_T * N_R * N_S.
  std::size_t packet_size() const { return std::size_t{n_tx} * n_rx * n_sub; }
  std::size_t antenna_pairs() const { return std::size_t{n_tx} * n_rx; }
  void validate() const;
  std::string to_string() const;  // "NTxNRxNS@rate"

  friend bool operator==(const CsiGeometry&, const CsiGeometry&) = default;
};

// Parses "2x2x30" into a geometry with the given sample rate.
CsiGeometry parse_geometry(const std::string& text, std::uint32_t sample_rate_hz = 100);

// Packet-major CSI stream: packets[((i*N_T + tx)*N_R + rx)*N_S + s].
struct CsiTrace {
  CsiGeometry geometry;
  std::vector<ComplexF> packets;
  std::optional<std::int32_t> label;

  std::size_t packet_count() const;
  ComplexF at(std::size_t packet, std::size_t tx, std::size_t rx, std::size_t sub) const;
  std::span<const ComplexF> window(std::size_t start, std::size_t length) const;
  void validate() const;
};

struct SegmentSpec {
  std::size_t phi = 200;     // window length in packets
  std::size_t upsilon = 100;  // hop between consecutive window starts

  void validate() const;
};

struct LayoutOptions {
  // Appends N_T*(N_R-1) channels holding arg(h[tx,rx] * conj(h[tx,0])).
  bool append_phase_difference = false;
};

// Network input: (C, H, W) = (antenna pairs [+ phase channels], subcarriers, packets).
struct CsiTensor {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;
  std::string source_trace;
  std::size_t start_packet = 0;
  std::optional<std::int32_t> label;

  double at(std::size_t c, std::size_t h, std::size_t w) const { return data[(c * height + h) * width + w]; }
};

// Row-major complex matrix, used for the per-subcarrier channel gamma_s.
struct ComplexMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Complex> data;

  static ComplexMatrix identity(std::size_t n, Complex diag = 1.0);
  Complex operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// B = gamma * A + noise, noise i.i.d. complex Gaussian with std `noise_sigma` per real component.
std::vector<Complex> channel_model(std::span<const Complex> tx, const ComplexMatrix& csi, double noise_sigma,
                                   std::mt19937_64& rng);

// Tensorizes one window of phi packets laid out packet-major.
CsiTensor layout_tensor(std::span<const ComplexF> window, const CsiGeometry& geometry, std::size_t phi,
                        const LayoutOptions& options = {});

// Sliding windows starting at 0, upsilon, 2*upsilon, ... while start + phi <= I.
std::vector<CsiTensor> segment(const CsiTrace& trace, const SegmentSpec& spec, const LayoutOptions& options = {},
                               const std::string& source = {});

std::size_t segment_count(std::size_t packets, const SegmentSpec& spec);

struct SyntheticOptions {
  std::size_t class_count = 4;
  double noise_sigma = 0.05;
  double modulation_depth = 1.0;
};

// Deterministic synthetic trace whose subcarrier magnitudes carry a
// class-specific chirp (band + sweep rate) in the time-frequency plane.
CsiTrace generate_synthetic(const CsiGeometry& geometry, std::size_t class_id, std::size_t duration_packets,
                            std::uint64_t seed, const SyntheticOptions& options = {});

}  // namespace grasens
