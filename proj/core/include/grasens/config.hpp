#pragma once

#include <nlohmann/json.hpp>

#include "grasens/antialias.hpp"
#include "grasens/csi.hpp"
#include "grasens/fractal.hpp"
#include "grasens/network.hpp"
#include "grasens/optimizer.hpp"

// JSON mapping for every configuration struct. Missing keys keep the struct's
// current value, so a partial document layers on top of defaults.
namespace grasens {

void to_json(nlohmann::json& j, const CsiGeometry& g);
void from_json(const nlohmann::json& j, CsiGeometry& g);
void to_json(nlohmann::json& j, const SegmentSpec& s);
void from_json(const nlohmann::json& j, SegmentSpec& s);
void to_json(nlohmann::json& j, const LayoutOptions& o);
void from_json(const nlohmann::json& j, LayoutOptions& o);
void to_json(nlohmann::json& j, const BlurSpec& b);
void from_json(const nlohmann::json& j, BlurSpec& b);
void to_json(nlohmann::json& j, const FdSpec& f);
void from_json(const nlohmann::json& j, FdSpec& f);
void to_json(nlohmann::json& j, const BlockToggles& t);
void from_json(const nlohmann::json& j, BlockToggles& t);
void to_json(nlohmann::json& j, const BlockConfig& b);
void from_json(const nlohmann::json& j, BlockConfig& b);
void to_json(nlohmann::json& j, const ModelConfig& m);
void from_json(const nlohmann::json& j, ModelConfig& m);
void to_json(nlohmann::json& j, const TrainConfig& t);
void from_json(const nlohmann::json& j, TrainConfig& t);

// Overlays `j` onto `value` without resetting absent fields.
template <typename T>
void merge_from_json(const nlohmann::json& j, T& value) {
  from_json(j, value);
}

}  // namespace grasens
