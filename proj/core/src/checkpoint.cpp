#include "grasens/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <map>

#include "byteorder.hpp"
#include "grasens/config.hpp"
#include "grasens/errors.hpp"

namespace grasens {

using detail::get_le;
using detail::put_le;

namespace {

constexpr std::size_t kPreambleBytes = 16;  // magic, version, reserved, header length

struct IndexEntry {
  std::size_t offset = 0;
  Shape shape;
};

void append_tensor(nlohmann::json& index, std::vector<double>& payload, const std::string& name, const Shape& shape,
                   std::span<const double> values) {
  index.push_back({{"name", name}, {"offset", payload.size()}, {"shape", shape}});
  payload.insert(payload.end(), values.begin(), values.end());
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const GraSensModel& model, const TrainingState& state) {
  nlohmann::json index = nlohmann::json::array();
  std::vector<double> payload;
  for (const auto& p : model.named_parameters()) append_tensor(index, payload, p.name, p.value.shape(), p.value.data());

  if (!state.velocity.empty()) {
    const auto trainable = model.trainable_parameters();
    if (state.velocity.size() != trainable.size()) {
      throw ConfigError("optimizer state has " + std::to_string(state.velocity.size()) + " buffers for " +
                        std::to_string(trainable.size()) + " trainable parameters");
    }
    for (std::size_t i = 0; i < trainable.size(); ++i) {
      if (state.velocity[i].size() != trainable[i].value.numel()) {
        throw ConfigError("velocity for " + trainable[i].name + " has the wrong size");
      }
      append_tensor(index, payload, "velocity/" + trainable[i].name, trainable[i].value.shape(), state.velocity[i]);
    }
  }

  const nlohmann::json header = {{"format", "grasens-checkpoint"},
                                 {"model", model.config()},
                                 {"train", state.train},
                                 {"epoch", state.epoch},
                                 {"rng_state", state.rng_state},
                                 {"run", state.run},
                                 {"has_velocity", !state.velocity.empty()},
                                 {"payload_values", payload.size()},
                                 {"tensors", index}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kPreambleBytes + text.size() + payload.size() * 8);
  for (char c : {'G', 'C', 'K', 'P'}) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint16_t>(out, kCheckpointVersion);
  put_le<std::uint16_t>(out, 0);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (double v : payload) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

LoadedCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || bytes[0] != 'G' || bytes[1] != 'C' || bytes[2] != 'K' || bytes[3] != 'P') {
    throw ParseError("bad magic: expected \"GCKP\"", 0);
  }
  if (bytes.size() < kPreambleBytes) {
    throw ParseError("truncated checkpoint preamble: need " + std::to_string(kPreambleBytes) + " bytes, file has " +
                         std::to_string(bytes.size()),
                     bytes.size());
  }
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version), 4);
  const auto header_len = get_le<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - kPreambleBytes) {
    throw ParseError("header length " + std::to_string(header_len) + " exceeds the file", 8);
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPreambleBytes,
                                   bytes.begin() + static_cast<std::ptrdiff_t>(kPreambleBytes + header_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("checkpoint header is not valid JSON: ") + e.what(), kPreambleBytes + (e.byte > 0 ? e.byte - 1 : 0));
  }

  const std::size_t payload_start = kPreambleBytes + header_len;
  ModelConfig model_cfg;
  TrainingState state;
  std::size_t payload_values = 0;
  std::map<std::string, IndexEntry> index;
  bool has_velocity = false;
  try {
    model_cfg = header.at("model").get<ModelConfig>();
    state.train = header.at("train").get<TrainConfig>();
    state.epoch = header.at("epoch").get<std::size_t>();
    state.rng_state = header.at("rng_state").get<std::string>();
    state.run = header.at("run");
    has_velocity = header.at("has_velocity").get<bool>();
    payload_values = header.at("payload_values").get<std::size_t>();
    for (const auto& t : header.at("tensors")) {
      IndexEntry e{t.at("offset").get<std::size_t>(), t.at("shape").get<Shape>()};
      if (e.offset > payload_values || numel(e.shape) > payload_values - e.offset) {
        throw ParseError("tensor " + t.at("name").get<std::string>() + " lies outside the payload", kPreambleBytes);
      }
      index[t.at("name").get<std::string>()] = std::move(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header is incomplete: ") + e.what(), kPreambleBytes);
  }
  const std::size_t expected = payload_start + payload_values * 8;
  if (bytes.size() != expected) {
    throw ParseError("payload size mismatch: expected " + std::to_string(expected) + " bytes in total, file has " +
                         std::to_string(bytes.size()),
                     std::min(bytes.size(), expected));
  }

  const auto read_into = [&](const std::string& name, const Shape& shape, std::span<double> dst) {
    const auto it = index.find(name);
    if (it == index.end()) throw ConfigError("checkpoint has no tensor named " + name);
    if (it->second.shape != shape) {
      throw ConfigError("tensor " + name + " has shape " + to_string(it->second.shape) + ", model expects " +
                        to_string(shape));
    }
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, payload_start + (it->second.offset + i) * 8));
    }
  };

  GraSensModel model(model_cfg);
  for (auto& p : model.named_parameters()) read_into(p.name, p.value.shape(), p.value.mutable_data());
  if (has_velocity) {
    for (const auto& p : model.trainable_parameters()) {
      std::vector<double> v(p.value.numel());
      read_into("velocity/" + p.name, p.value.shape(), v);
      state.velocity.push_back(std::move(v));
    }
  }
  return {std::move(model), std::move(state)};
}

void save_checkpoint(const GraSensModel& model, const TrainingState& state, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(model, state);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.offset());
  }
}

}  // namespace grasens
