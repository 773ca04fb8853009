#include "grasens/csi.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "grasens/errors.hpp"

namespace grasens {

void CsiGeometry::validate() const {
  if (n_tx == 0 || n_rx == 0 || n_sub == 0 || sample_rate_hz == 0) {
    throw ConfigError("CSI geometry must be strictly positive, got " + to_string());
  }
}

std::string CsiGeometry::to_string() const {
  return std::to_string(n_tx) + "x" + std::to_string(n_rx) + "x" + std::to_string(n_sub) + "@" +
         std::to_string(sample_rate_hz) + "Hz";
}

CsiGeometry parse_geometry(const std::string& text, std::uint32_t sample_rate_hz) {
  std::istringstream in(text);
  unsigned long dims[3] = {0, 0, 0};
  char sep1 = 0, sep2 = 0;
  in >> dims[0] >> sep1 >> dims[1] >> sep2 >> dims[2];
  if (!in || sep1 != 'x' || sep2 != 'x' || !in.eof()) {
    throw UsageError("geometry must look like NTxNRxNS (e.g. 2x2x30), got '" + text + "'");
  }
  for (unsigned long d : dims) {
    if (d == 0 || d > 0xFFFF) throw UsageError("geometry extents must be in [1, 65535], got '" + text + "'");
  }
  CsiGeometry g{static_cast<std::uint16_t>(dims[0]), static_cast<std::uint16_t>(dims[1]),
                static_cast<std::uint16_t>(dims[2]), sample_rate_hz};
  g.validate();
  return g;
}

std::size_t CsiTrace::packet_count() const {
  const std::size_t ps = geometry.packet_size();
  return ps == 0 ? 0 : packets.size() / ps;
}

ComplexF CsiTrace::at(std::size_t packet, std::size_t tx, std::size_t rx, std::size_t sub) const {
  return packets[((packet * geometry.n_tx + tx) * geometry.n_rx + rx) * geometry.n_sub + sub];
}

std::span<const ComplexF> CsiTrace::window(std::size_t start, std::size_t length) const {
  const std::size_t ps = geometry.packet_size();
  if (start + length > packet_count()) {
    throw ConfigError("window [" + std::to_string(start) + ", " + std::to_string(start + length) +
                      ") exceeds trace of " + std::to_string(packet_count()) + " packets");
  }
  return std::span<const ComplexF>(packets).subspan(start * ps, length * ps);
}

void CsiTrace::validate() const {
  geometry.validate();
  if (packets.empty() || packets.size() % geometry.packet_size() != 0) {
    throw ConfigError("trace payload of " + std::to_string(packets.size()) + " values does not tile geometry " +
                      geometry.to_string());
  }
}

void SegmentSpec::validate() const {
  if (upsilon < 1 || upsilon > phi) {
    throw ConfigError("window settings need 1 <= upsilon <= phi, got phi=" + std::to_string(phi) +
                      " upsilon=" + std::to_string(upsilon));
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n, Complex diag) {
  ComplexMatrix m{n, n, std::vector<Complex>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) m.data[i * n + i] = diag;
  return m;
}

std::vector<Complex> channel_model(std::span<const Complex> tx, const ComplexMatrix& csi, double noise_sigma,
                                   std::mt19937_64& rng) {
  if (tx.size() != csi.cols || csi.data.size() != csi.rows * csi.cols) {
    throw ConfigError("channel_model: transmit vector of length " + std::to_string(tx.size()) +
                      " does not match a " + std::to_string(csi.rows) + "x" + std::to_string(csi.cols) + " channel");
  }
  if (noise_sigma < 0.0) throw ConfigError("channel_model: noise sigma must be non-negative");
  std::vector<Complex> out(csi.rows, 0.0);
  for (std::size_t r = 0; r < csi.rows; ++r) {
    for (std::size_t c = 0; c < csi.cols; ++c) out[r] += csi(r, c) * tx[c];
  }
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (auto& v : out) v += Complex(noise(rng), noise(rng));
  }
  return out;
}

CsiTensor layout_tensor(std::span<const ComplexF> window, const CsiGeometry& geometry, std::size_t phi,
                        const LayoutOptions& options) {
  geometry.validate();
  const std::size_t ps = geometry.packet_size();
  if (window.size() != phi * ps) {
    throw ConfigError("layout_tensor: window holds " + std::to_string(window.size()) + " values, expected " +
                      std::to_string(phi * ps));
  }
  const std::size_t n_tx = geometry.n_tx, n_rx = geometry.n_rx, n_sub = geometry.n_sub;
  const std::size_t pairs = n_tx * n_rx;
  const std::size_t phase_channels = options.append_phase_difference ? n_tx * (n_rx - 1) : 0;

  CsiTensor t;
  t.channels = pairs + phase_channels;
  t.height = n_sub;
  t.width = phi;
  t.data.assign(t.channels * t.height * t.width, 0.0);
  auto value = [&](std::size_t w, std::size_t tx, std::size_t rx, std::size_t s) {
    const ComplexF v = window[((w * n_tx + tx) * n_rx + rx) * n_sub + s];
    return Complex(v.real(), v.imag());
  };
  for (std::size_t c = 0; c < pairs; ++c) {
    const std::size_t tx = c / n_rx, rx = c % n_rx;
    for (std::size_t h = 0; h < n_sub; ++h) {
      for (std::size_t w = 0; w < phi; ++w) t.data[(c * n_sub + h) * phi + w] = std::abs(value(w, tx, rx, h));
    }
  }
  for (std::size_t extra = 0; extra < phase_channels; ++extra) {
    const std::size_t tx = extra / (n_rx - 1), rx = extra % (n_rx - 1) + 1;
    const std::size_t c = pairs + extra;
    for (std::size_t h = 0; h < n_sub; ++h) {
      for (std::size_t w = 0; w < phi; ++w) {
        t.data[(c * n_sub + h) * phi + w] = std::arg(value(w, tx, rx, h) * std::conj(value(w, tx, 0, h)));
      }
    }
  }
  return t;
}

std::size_t segment_count(std::size_t packets, const SegmentSpec& spec) {
  spec.validate();
  if (packets < spec.phi) return 0;
  return (packets - spec.phi) / spec.upsilon + 1;
}

std::vector<CsiTensor> segment(const CsiTrace& trace, const SegmentSpec& spec, const LayoutOptions& options,
                               const std::string& source) {
  trace.validate();
  spec.validate();
  const std::size_t total = trace.packet_count();
  if (total < spec.phi) {
    throw ConfigError("segment: trace '" + source + "' has " + std::to_string(total) +
                      " packets, fewer than the window length phi=" + std::to_string(spec.phi) +
                      "; no segments produced");
  }
  const std::size_t count = segment_count(total, spec);
  std::vector<CsiTensor> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t start = k * spec.upsilon;
    CsiTensor t = layout_tensor(trace.window(start, spec.phi), trace.geometry, spec.phi, options);
    t.source_trace = source;
    t.start_packet = start;
    t.label = trace.label;
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

constexpr std::size_t kChirpPeriod = 32;

}  // namespace

CsiTrace generate_synthetic(const CsiGeometry& geometry, std::size_t class_id, std::size_t duration_packets,
                            std::uint64_t seed, const SyntheticOptions& options) {
  geometry.validate();
  if (options.class_count == 0 || class_id >= options.class_count) {
    throw ConfigError("generate_synthetic: class " + std::to_string(class_id) + " outside " +
                      std::to_string(options.class_count) + " configured classes");
  }
  if (duration_packets == 0) throw ConfigError("generate_synthetic: duration must be at least one packet");

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(class_id), 0x47435349u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  const std::size_t n_tx = geometry.n_tx, n_rx = geometry.n_rx, n_sub = geometry.n_sub;
  const double ns = static_cast<double>(n_sub);

  // Static multipath per antenna pair: a dominant path plus two weaker echoes.
  std::vector<Complex> static_channel(n_tx * n_rx * n_sub);
  for (std::size_t pair = 0; pair < n_tx * n_rx; ++pair) {
    const double amps[3] = {1.0, 0.3 * unit(rng), 0.15 * unit(rng)};
    double delays[3];
    double phases[3];
    for (int k = 0; k < 3; ++k) {
      delays[k] = k == 0 ? 0.0 : 0.5 + unit(rng);
      phases[k] = kTwoPi * unit(rng);
    }
    for (std::size_t s = 0; s < n_sub; ++s) {
      Complex h = 0.0;
      for (int k = 0; k < 3; ++k) h += std::polar(amps[k], phases[k] - kTwoPi * delays[k] * static_cast<double>(s) / ns);
      static_channel[pair * n_sub + s] = h;
    }
  }

  // Class signature: a Gaussian ridge centred on the class band that sweeps
  // across subcarriers at a class-specific rate, periodically in time.
  const double k_classes = static_cast<double>(options.class_count);
  const double band = (static_cast<double>(class_id) + 0.5) / k_classes * ns;
  const double sweep = (class_id % 2 == 0 ? 1.0 : -1.0) * (0.5 + 0.5 * static_cast<double>(class_id) / k_classes) *
                       ns / (2.0 * k_classes);
  const double width = std::max(0.75, 0.35 * ns / k_classes);
  const double t0 = unit(rng) * static_cast<double>(kChirpPeriod);
  const double gain = 0.8 + 0.4 * unit(rng);

  CsiTrace trace;
  trace.geometry = geometry;
  trace.label = static_cast<std::int32_t>(class_id);
  trace.packets.resize(duration_packets * geometry.packet_size());

  ComplexMatrix gamma{n_rx, n_tx, std::vector<Complex>(n_rx * n_tx)};
  std::vector<Complex> probe(n_tx, 0.0);
  for (std::size_t i = 0; i < duration_packets; ++i) {
    const double phase = std::fmod(static_cast<double>(i) + t0, static_cast<double>(kChirpPeriod)) /
                         static_cast<double>(kChirpPeriod);
    const double centre = band + sweep * (phase - 0.5) * 2.0;
    for (std::size_t s = 0; s < n_sub; ++s) {
      const double d = (static_cast<double>(s) - centre) / width;
      const double modulation = gain * (1.0 + options.modulation_depth * std::exp(-0.5 * d * d));
      for (std::size_t rx = 0; rx < n_rx; ++rx) {
        for (std::size_t tx = 0; tx < n_tx; ++tx) {
          gamma.data[rx * n_tx + tx] = modulation * static_channel[(tx * n_rx + rx) * n_sub + s];
        }
      }
      // Sounding one transmit antenna at a time recovers one column of gamma.
      for (std::size_t tx = 0; tx < n_tx; ++tx) {
        std::fill(probe.begin(), probe.end(), Complex(0.0));
        probe[tx] = 1.0;
        const auto received = channel_model(probe, gamma, options.noise_sigma, rng);
        for (std::size_t rx = 0; rx < n_rx; ++rx) {
          trace.packets[((i * n_tx + tx) * n_rx + rx) * n_sub + s] =
              ComplexF(static_cast<float>(received[rx].real()), static_cast<float>(received[rx].imag()));
        }
      }
    }
  }
  return trace;
}

}  // namespace grasens
