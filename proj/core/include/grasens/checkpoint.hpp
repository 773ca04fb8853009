#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grasens/network.hpp"
#include "grasens/optimizer.hpp"

namespace grasens {

// Container layout, little-endian:
//   "GCKP" | version u16 = 1 | reserved u16 | header_len u64 | JSON header | f64 payload
// The header holds the model config, the train config, the epoch, the RNG state,
// the run description and an index of every tensor: {"name", "offset", "shape"}
// with offsets counted in f64 elements from the start of the payload. Optimizer
// velocities are stored as tensors named "velocity/<parameter>".
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct TrainingState {
  TrainConfig train{};
  std::size_t epoch = 0;
  std::string rng_state;  // textual std::mt19937_64 state; empty when unused
  // Velocity per trainable parameter, in trainable_parameters() order (may be empty).
  std::vector<std::vector<double>> velocity;
  // Free-form run description (data geometry, segmentation, ...) kept verbatim.
  nlohmann::json run = nlohmann::json::object();
};

std::vector<std::uint8_t> encode_checkpoint(const GraSensModel& model, const TrainingState& state);

struct LoadedCheckpoint {
  GraSensModel model;
  TrainingState state;
};

// Throws ParseError for malformed containers and ConfigError when the stored
// tensors do not match the parameters implied by the stored config.
LoadedCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const GraSensModel& model, const TrainingState& state, const std::filesystem::path& path);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace grasens
