#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grasens/csi.hpp"
#include "grasens/network.hpp"
#include "grasens/optimizer.hpp"

namespace grasens::cli {

// Everything a training run depends on. config.json in a run directory is
// this struct serialized after the model has been fitted to the data.
struct RunConfig {
  std::string manifest;
  std::string out = "run";
  SegmentSpec segments{};
  LayoutOptions layout{};
  ModelConfig model{};
  TrainConfig train{};
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

// Missing keys keep their current values, so defaults < file < flags layer cleanly.
RunConfig read_run_config(const std::filesystem::path& path, RunConfig base = {});

inline const std::vector<std::string> kAblationTokens{"gabor", "antialias", "temporal-att", "frequency-att"};

// Comma-separated ablation tokens; an unknown token is a UsageError listing the valid ones.
BlockToggles parse_ablations(const std::string& list);

// GRASENS_THREADS, default 1.
std::size_t worker_threads();

// Exit codes: 0 ok, 2 usage/configuration, 3 data/parse/io, 4 numeric divergence, 1 anything else.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDivergence = 4;

// Full command line without the program name. Diagnostics go to `err` as a
// single "error[kind]: message" line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grasens::cli
