#include "grasens/config.hpp"

#include "grasens/errors.hpp"

namespace grasens {
namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

void to_json(nlohmann::json& j, const CsiGeometry& g) {
  j = {{"n_tx", g.n_tx}, {"n_rx", g.n_rx}, {"n_sub", g.n_sub}, {"sample_rate_hz", g.sample_rate_hz}};
}

void from_json(const nlohmann::json& j, CsiGeometry& g) {
  read_if(j, "n_tx", g.n_tx);
  read_if(j, "n_rx", g.n_rx);
  read_if(j, "n_sub", g.n_sub);
  read_if(j, "sample_rate_hz", g.sample_rate_hz);
}

void to_json(nlohmann::json& j, const SegmentSpec& s) { j = {{"phi", s.phi}, {"upsilon", s.upsilon}}; }

void from_json(const nlohmann::json& j, SegmentSpec& s) {
  read_if(j, "phi", s.phi);
  read_if(j, "upsilon", s.upsilon);
}

void to_json(nlohmann::json& j, const LayoutOptions& o) {
  j = {{"append_phase_difference", o.append_phase_difference}};
}

void from_json(const nlohmann::json& j, LayoutOptions& o) {
  read_if(j, "append_phase_difference", o.append_phase_difference);
}

void to_json(nlohmann::json& j, const BlurSpec& b) {
  j = {{"kernel_size", b.kernel_size},
       {"stride", b.stride},
       {"mode", b.mode == BlurMode::kPredicted ? "predicted" : "fixed-binomial"},
       {"groups", b.groups}};
}

void from_json(const nlohmann::json& j, BlurSpec& b) {
  read_if(j, "kernel_size", b.kernel_size);
  read_if(j, "stride", b.stride);
  read_if(j, "groups", b.groups);
  if (j.contains("mode")) {
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "fixed-binomial") {
      b.mode = BlurMode::kFixedBinomial;
    } else if (mode == "predicted") {
      b.mode = BlurMode::kPredicted;
    } else {
      throw ConfigError("unknown blur mode '" + mode + "' (expected fixed-binomial or predicted)");
    }
  }
}

void to_json(nlohmann::json& j, const FdSpec& f) {
  j = {{"scales", f.scales}, {"gray_levels", f.gray_levels}, {"mode", "surface-box-count"}};
}

void from_json(const nlohmann::json& j, FdSpec& f) {
  read_if(j, "scales", f.scales);
  read_if(j, "gray_levels", f.gray_levels);
}

void to_json(nlohmann::json& j, const BlockToggles& t) {
  j = {{"gabor", t.gabor},
       {"antialias", t.antialias},
       {"temporal_att", t.temporal_att},
       {"frequency_att", t.frequency_att}};
}

void from_json(const nlohmann::json& j, BlockToggles& t) {
  read_if(j, "gabor", t.gabor);
  read_if(j, "antialias", t.antialias);
  read_if(j, "temporal_att", t.temporal_att);
  read_if(j, "frequency_att", t.frequency_att);
}

void to_json(nlohmann::json& j, const BlockConfig& b) {
  j = {{"width", b.width},         {"gabor_kernel", b.gabor_kernel}, {"conv_kernel", b.conv_kernel},
       {"reduction", b.reduction}, {"blur", b.blur},                 {"fd", b.fd},
       {"toggles", b.toggles},     {"gabor_frozen", b.gabor_frozen}};
}

void from_json(const nlohmann::json& j, BlockConfig& b) {
  read_if(j, "width", b.width);
  read_if(j, "gabor_kernel", b.gabor_kernel);
  read_if(j, "conv_kernel", b.conv_kernel);
  read_if(j, "reduction", b.reduction);
  if (j.contains("blur")) from_json(j.at("blur"), b.blur);
  if (j.contains("fd")) from_json(j.at("fd"), b.fd);
  if (j.contains("toggles")) from_json(j.at("toggles"), b.toggles);
  read_if(j, "gabor_frozen", b.gabor_frozen);
}

void to_json(nlohmann::json& j, const ModelConfig& m) {
  j = {{"lambda", m.lambda},
       {"classes", m.classes},
       {"upsample_stride", m.upsample_stride},
       {"seed", m.seed},
       {"in_channels", m.in_channels},
       {"in_height", m.in_height},
       {"in_width", m.in_width},
       {"task_blur", m.task_blur},
       {"block", m.block}};
}

void from_json(const nlohmann::json& j, ModelConfig& m) {
  read_if(j, "lambda", m.lambda);
  read_if(j, "classes", m.classes);
  read_if(j, "upsample_stride", m.upsample_stride);
  read_if(j, "seed", m.seed);
  read_if(j, "in_channels", m.in_channels);
  read_if(j, "in_height", m.in_height);
  read_if(j, "in_width", m.in_width);
  read_if(j, "task_blur", m.task_blur);
  if (j.contains("block")) from_json(j.at("block"), m.block);
}

void to_json(nlohmann::json& j, const TrainConfig& t) {
  j = {{"lr", t.lr}, {"momentum", t.momentum}, {"epochs", t.epochs}, {"batch_size", t.batch_size}, {"seed", t.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& t) {
  read_if(j, "lr", t.lr);
  read_if(j, "momentum", t.momentum);
  read_if(j, "epochs", t.epochs);
  read_if(j, "batch_size", t.batch_size);
  read_if(j, "seed", t.seed);
}

}  // namespace grasens
