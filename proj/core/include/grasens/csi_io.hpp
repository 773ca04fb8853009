#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "grasens/csi.hpp"

namespace grasens {

// GCSI container, little-endian:
//   "GCSI" | version u16 = 1 | N_T u16 | N_R u16 | N_S u16 | sample_rate_hz u32 |
//   label i32 (-1 = none) | packet_count u64 | payload
// Payload is packet-major then tx, rx, subcarrier; each value is f32 real, f32 imag.
inline constexpr std::size_t kGcsiHeaderBytes = 28;
inline constexpr std::uint16_t kGcsiVersion = 1;

std::vector<std::uint8_t> encode_trace(const CsiTrace& trace);
CsiTrace decode_trace(const std::vector<std::uint8_t>& bytes);

CsiTrace read_trace(const std::filesystem::path& path);
void write_trace(const CsiTrace& trace, const std::filesystem::path& path);

// One line of the dataset manifest: {"path": ..., "label": ..., "split": ...}.
struct ManifestEntry {
  std::string path;
  std::int32_t label = -1;
  std::string split;
};

struct Manifest {
  std::filesystem::path base_dir;  // relative entry paths resolve against this
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry& entry) const;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace grasens
