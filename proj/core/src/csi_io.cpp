#include "grasens/csi_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "byteorder.hpp"
#include "grasens/errors.hpp"

namespace grasens {

using detail::get_le;
using detail::put_le;

std::vector<std::uint8_t> encode_trace(const CsiTrace& trace) {
  trace.validate();
  std::vector<std::uint8_t> out;
  out.reserve(kGcsiHeaderBytes + trace.packets.size() * 8);
  for (char c : {'G', 'C', 'S', 'I'}) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint16_t>(out, kGcsiVersion);
  put_le<std::uint16_t>(out, trace.geometry.n_tx);
  put_le<std::uint16_t>(out, trace.geometry.n_rx);
  put_le<std::uint16_t>(out, trace.geometry.n_sub);
  put_le<std::uint32_t>(out, trace.geometry.sample_rate_hz);
  put_le<std::int32_t>(out, trace.label.value_or(-1));
  put_le<std::uint64_t>(out, trace.packet_count());
  for (const ComplexF& v : trace.packets) {
    put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v.real()));
    put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v.imag()));
  }
  return out;
}

CsiTrace decode_trace(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || bytes[0] != 'G' || bytes[1] != 'C' || bytes[2] != 'S' || bytes[3] != 'I') {
    throw ParseError("bad magic: expected \"GCSI\"", 0);
  }
  if (bytes.size() < kGcsiHeaderBytes) {
    throw ParseError("truncated header: need " + std::to_string(kGcsiHeaderBytes) + " bytes, file has " +
                         std::to_string(bytes.size()),
                     bytes.size());
  }
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kGcsiVersion) throw ParseError("unsupported GCSI version " + std::to_string(version), 4);

  CsiTrace trace;
  trace.geometry.n_tx = get_le<std::uint16_t>(bytes, 6);
  trace.geometry.n_rx = get_le<std::uint16_t>(bytes, 8);
  trace.geometry.n_sub = get_le<std::uint16_t>(bytes, 10);
  trace.geometry.sample_rate_hz = get_le<std::uint32_t>(bytes, 12);
  if (trace.geometry.n_tx == 0) throw ParseError("N_T must be positive", 6);
  if (trace.geometry.n_rx == 0) throw ParseError("N_R must be positive", 8);
  if (trace.geometry.n_sub == 0) throw ParseError("N_S must be positive", 10);
  if (trace.geometry.sample_rate_hz == 0) throw ParseError("sample rate must be positive", 12);
  const auto label = get_le<std::int32_t>(bytes, 16);
  if (label < -1) throw ParseError("label must be -1 or a class id, got " + std::to_string(label), 16);
  if (label >= 0) trace.label = label;
  const auto packets = get_le<std::uint64_t>(bytes, 20);
  if (packets == 0) throw ParseError("packet count must be at least 1", 20);

  const std::uint64_t values = packets * trace.geometry.packet_size();
  if (values / trace.geometry.packet_size() != packets || values > (UINT64_MAX - kGcsiHeaderBytes) / 8) {
    throw ParseError("packet count " + std::to_string(packets) + " overflows the payload size", 20);
  }
  const std::uint64_t expected = kGcsiHeaderBytes + values * 8;
  if (bytes.size() < expected) {
    throw ParseError("truncated payload: header declares " + std::to_string(packets) + " packets (" +
                         std::to_string(expected) + " bytes expected), file has " + std::to_string(bytes.size()),
                     bytes.size());
  }
  if (bytes.size() > expected) {
    throw ParseError("payload size disagrees with geometry: " + std::to_string(bytes.size() - expected) +
                         " trailing bytes after the declared " + std::to_string(expected),
                     expected);
  }
  trace.packets.resize(values);
  for (std::size_t i = 0; i < values; ++i) {
    const std::size_t off = kGcsiHeaderBytes + i * 8;
    trace.packets[i] = ComplexF(std::bit_cast<float>(get_le<std::uint32_t>(bytes, off)),
                                std::bit_cast<float>(get_le<std::uint32_t>(bytes, off + 4)));
  }
  return trace;
}

CsiTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_trace(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.offset());
  }
}

void write_trace(const CsiTrace& trace, const std::filesystem::path& path) {
  const auto bytes = encode_trace(trace);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write trace " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::filesystem::path Manifest::resolve(const ManifestEntry& entry) const {
  std::filesystem::path p(entry.path);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  std::uint64_t offset = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::uint64_t line_offset = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.label = j.value("label", -1);
      e.split = j.value("split", std::string("train"));
      m.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + " line " + std::to_string(line_no) + ": " + e.what(), line_offset);
    }
  }
  return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (const auto& e : manifest.entries) {
    nlohmann::json j{{"path", e.path}, {"label", e.label}, {"split", e.split}};
    out << j.dump() << "\n";
  }
}

}  // namespace grasens
