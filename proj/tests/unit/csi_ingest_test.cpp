#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "grasens/csi.hpp"
#include "grasens/csi_io.hpp"
#include "grasens/errors.hpp"
#include "oracles.hpp"

using namespace grasens;

namespace {

CsiTrace random_trace(const CsiGeometry& g, std::size_t packets, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  CsiTrace t;
  t.geometry = g;
  t.label = static_cast<std::int32_t>(seed % 3);
  t.packets.resize(packets * g.packet_size());
  for (auto& v : t.packets) v = {n(rng), n(rng)};
  return t;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("grasens_csi_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Geometry, ParsesAndValidates) {
  const auto g = parse_geometry("2x3x30", 500);
  EXPECT_EQ(g.n_tx, 2);
  EXPECT_EQ(g.n_rx, 3);
  EXPECT_EQ(g.n_sub, 30);
  EXPECT_EQ(g.sample_rate_hz, 500u);
  EXPECT_EQ(g.packet_size(), 180u);
  EXPECT_THROW(parse_geometry("2x0x30"), UsageError);
  EXPECT_THROW(parse_geometry("2x2"), UsageError);
  EXPECT_THROW(parse_geometry("axbxc"), UsageError);
}

TEST(ChannelModel, IdentityChannelNoNoise) {
  std::mt19937_64 rng(1);
  const std::vector<Complex> a{1.0, 1.0};
  const auto b = channel_model(a, ComplexMatrix::identity(2), 0.0, rng);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0], Complex(1.0, 0.0));
  EXPECT_EQ(b[1], Complex(1.0, 0.0));
}

TEST(ChannelModel, ScaledIdentity) {
  std::mt19937_64 rng(1);
  const std::vector<Complex> a{Complex(1.0, 0.0)};
  const auto b = channel_model(a, ComplexMatrix::identity(1, 2.0), 0.0, rng);
  EXPECT_EQ(b[0], Complex(2.0, 0.0));
}

TEST(ChannelModel, DimensionMismatchIsConfigError) {
  std::mt19937_64 rng(1);
  const std::vector<Complex> a{1.0, 1.0, 1.0};
  EXPECT_THROW(channel_model(a, ComplexMatrix::identity(2), 0.0, rng), ConfigError);
  EXPECT_THROW(channel_model(a, ComplexMatrix::identity(3), -1.0, rng), ConfigError);
}

TEST(ChannelModel, NoiseVarianceMonteCarlo) {
  std::mt19937_64 rng(123);
  const std::vector<Complex> a{Complex(0.3, -0.2)};
  const auto gamma = ComplexMatrix::identity(1, Complex(1.5, 0.5));
  const Complex clean = gamma(0, 0) * a[0];
  const std::size_t n = 100000;
  double sr = 0, si = 0, srr = 0, sii = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Complex e = channel_model(a, gamma, 0.1, rng)[0] - clean;
    sr += e.real();
    si += e.imag();
    srr += e.real() * e.real();
    sii += e.imag() * e.imag();
  }
  const double nn = static_cast<double>(n);
  const double var_r = srr / nn - (sr / nn) * (sr / nn);
  const double var_i = sii / nn - (si / nn) * (si / nn);
  EXPECT_NEAR(var_r, 0.01, 0.0005);
  EXPECT_NEAR(var_i, 0.01, 0.0005);
}

TEST(Synthetic, DeterministicGivenSeed) {
  const auto g = parse_geometry("2x2x30");
  const auto a = generate_synthetic(g, 1, 100, 77);
  const auto b = generate_synthetic(g, 1, 100, 77);
  EXPECT_EQ(a.packets, b.packets);
  EXPECT_EQ(a.label, b.label);
  EXPECT_EQ(a.packet_count(), 100u);
}

TEST(Synthetic, ClassesDiffer) {
  const auto g = parse_geometry("1x2x16");
  const auto a = generate_synthetic(g, 0, 64, 5);
  const auto b = generate_synthetic(g, 1, 64, 5);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < a.packets.size(); ++i) differing += a.packets[i] != b.packets[i] ? 1 : 0;
  EXPECT_GE(static_cast<double>(differing), 0.01 * static_cast<double>(a.packets.size()));
}

TEST(Synthetic, ClassOutsideConfiguredCountIsRejected) {
  SyntheticOptions opts;
  opts.class_count = 2;
  EXPECT_THROW(generate_synthetic(parse_geometry("1x1x8"), 2, 10, 0, opts), ConfigError);
}

// Oracle run before the network is trusted: mean per-subcarrier magnitude is
// linearly separable between two synthetic classes.
TEST(Synthetic, LeastSquaresSeparatesTwoClasses) {
  const auto g = parse_geometry("1x2x16");
  SyntheticOptions opts;
  opts.class_count = 2;
  std::vector<std::vector<double>> train, test;
  std::vector<std::size_t> train_y, test_y;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t cls = i % 2;
    const auto trace = generate_synthetic(g, cls, 64, 1000 + i, opts);
    const CsiTensor t = layout_tensor(trace.window(0, 64), g, 64);
    std::vector<double> feat(t.height, 0.0);
    for (std::size_t c = 0; c < t.channels; ++c)
      for (std::size_t h = 0; h < t.height; ++h)
        for (std::size_t w = 0; w < t.width; ++w) feat[h] += t.at(c, h, w) / static_cast<double>(t.channels * t.width);
    (i < 50 ? train : test).push_back(feat);
    (i < 50 ? train_y : test_y).push_back(cls);
  }
  const auto pred = grasens::testing::least_squares_classify(train, train_y, test, 2, 1e-3);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == test_y[i] ? 1 : 0;
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(pred.size()), 0.90);
}

TEST(Segment, EnumeratesWindowStarts) {
  const auto trace = random_trace(parse_geometry("1x1x4"), 1000, 1);
  const auto segs = segment(trace, {200, 100});
  ASSERT_EQ(segs.size(), 9u);
  for (std::size_t i = 0; i < segs.size(); ++i) EXPECT_EQ(segs[i].start_packet, 100 * i);
  EXPECT_EQ(segment_count(1000, {200, 100}), 9u);
  for (std::size_t len : {200u, 257u, 999u, 1000u, 1301u})
    for (std::size_t hop : {1u, 7u, 100u, 200u})
      EXPECT_EQ(segment_count(len, {200, hop}), (len - 200) / hop + 1);
}

TEST(Segment, ExactLengthGivesOneWindow) {
  const auto trace = random_trace(parse_geometry("1x1x2"), 200, 2);
  EXPECT_EQ(segment(trace, {200, 200}).size(), 1u);
}

TEST(Segment, NonOverlappingWindowsTileTheTrace) {
  const CsiGeometry g = parse_geometry("1x2x3");
  const auto trace = random_trace(g, 30, 3);
  const auto segs = segment(trace, {10, 10});
  ASSERT_EQ(segs.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t h = 0; h < 3; ++h)
        for (std::size_t w = 0; w < 10; ++w)
          EXPECT_EQ(segs[s].at(c, h, w), std::abs(std::complex<double>(trace.at(s * 10 + w, 0, c, h))));
}

TEST(Segment, ShortTraceIsRejectedWithDiagnostic) {
  const auto trace = random_trace(parse_geometry("1x1x2"), 50, 4);
  try {
    segment(trace, {200, 100});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("50"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("200"), std::string::npos);
  }
}

TEST(Segment, SpecInvariants) {
  EXPECT_THROW((SegmentSpec{10, 0}.validate()), ConfigError);
  EXPECT_THROW((SegmentSpec{10, 11}.validate()), ConfigError);
  EXPECT_NO_THROW((SegmentSpec{10, 10}.validate()));
}

TEST(Layout, AllOnesWindow) {
  const CsiGeometry g = parse_geometry("2x3x4");
  std::vector<ComplexF> window(5 * g.packet_size(), ComplexF(1.0f, 0.0f));
  const CsiTensor t = layout_tensor(window, g, 5);
  EXPECT_EQ(t.channels, 6u);
  EXPECT_EQ(t.height, 4u);
  EXPECT_EQ(t.width, 5u);
  for (double v : t.data) EXPECT_EQ(v, 1.0);
}

TEST(Layout, MagnitudeOfThreeFourI) {
  const CsiGeometry g = parse_geometry("1x1x2");
  std::vector<ComplexF> window(3 * g.packet_size(), ComplexF(0.0f, 0.0f));
  window[0] = {3.0f, 4.0f};
  EXPECT_EQ(layout_tensor(window, g, 3).at(0, 0, 0), 5.0);
}

TEST(Layout, IndexArithmeticOracle) {
  const CsiGeometry g = parse_geometry("2x3x5");
  const auto trace = random_trace(g, 7, 9);
  const CsiTensor t = layout_tensor(trace.window(0, 7), g, 7);
  std::mt19937_64 rng(4);
  for (int probe = 0; probe < 50; ++probe) {
    const std::size_t c = rng() % t.channels, h = rng() % t.height, w = rng() % t.width;
    const ComplexF v = trace.packets[((w * g.n_tx + c / g.n_rx) * g.n_rx + c % g.n_rx) * g.n_sub + h];
    EXPECT_EQ(t.at(c, h, w), std::abs(std::complex<double>(v)));
  }
}

TEST(Layout, PreservesEnergy) {
  const CsiGeometry g = parse_geometry("2x2x6");
  const auto trace = random_trace(g, 9, 11);
  const CsiTensor t = layout_tensor(trace.window(0, 9), g, 9);
  double tensor_energy = 0, window_energy = 0;
  for (double v : t.data) tensor_energy += v * v;
  for (const auto& v : trace.packets) window_energy += std::norm(std::complex<double>(v));
  EXPECT_NEAR(tensor_energy, window_energy, 1e-9 * window_energy);
}

TEST(Layout, ValuesAreNonNegativeAndSizeMatches) {
  const CsiGeometry g = parse_geometry("3x2x4");
  const auto trace = random_trace(g, 6, 12);
  const CsiTensor t = layout_tensor(trace.window(0, 6), g, 6);
  EXPECT_EQ(t.data.size(), std::size_t{3} * 2 * 4 * 6);
  for (double v : t.data) EXPECT_GE(v, 0.0);
}

TEST(Layout, PhaseDifferenceChannelsAreAppended) {
  const CsiGeometry g = parse_geometry("2x3x4");
  const auto trace = random_trace(g, 5, 13);
  LayoutOptions opts;
  opts.append_phase_difference = true;
  const CsiTensor t = layout_tensor(trace.window(0, 5), g, 5, opts);
  ASSERT_EQ(t.channels, 6u + 4u);
  const auto h = [&](std::size_t w, std::size_t tx, std::size_t rx, std::size_t s) {
    return std::complex<double>(trace.at(w, tx, rx, s));
  };
  // Channel 6 is tx 0, rx 1 against rx 0.
  EXPECT_NEAR(t.at(6, 2, 3), std::arg(h(3, 0, 1, 2) * std::conj(h(3, 0, 0, 2))), 1e-12);
  EXPECT_NEAR(t.at(9, 1, 4), std::arg(h(4, 1, 2, 1) * std::conj(h(4, 1, 0, 1))), 1e-12);
}

TEST(Gcsi, RoundTripIsBitIdentical) {
  const auto dir = temp_dir("roundtrip");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto trace = random_trace(parse_geometry("2x2x7", 250), 13, seed);
    if (seed == 0) trace.label.reset();
    write_trace(trace, dir / "t.gcsi");
    const auto back = read_trace(dir / "t.gcsi");
    EXPECT_EQ(back.geometry, trace.geometry);
    EXPECT_EQ(back.label, trace.label);
    ASSERT_EQ(back.packets.size(), trace.packets.size());
    EXPECT_EQ(std::memcmp(back.packets.data(), trace.packets.data(), trace.packets.size() * sizeof(ComplexF)), 0);
  }
}

TEST(Gcsi, HeaderLayout) {
  const auto bytes = encode_trace(random_trace(parse_geometry("2x3x4", 1000), 2, 1));
  ASSERT_EQ(bytes.size(), kGcsiHeaderBytes + 2 * 24 * 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "GCSI");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[6], 2);
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[10], 4);
  EXPECT_EQ(bytes[12] | (bytes[13] << 8), 1000);
  EXPECT_EQ(bytes[20], 2);
}

TEST(Gcsi, WrongMagicFailsAtOffsetZero) {
  auto bytes = encode_trace(random_trace(parse_geometry("1x1x2"), 3, 1));
  bytes[0] = 'X';
  try {
    decode_trace(bytes);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
  }
}

TEST(Gcsi, TruncatedPayloadNamesExpectedByteCount) {
  const CsiGeometry g = parse_geometry("1x1x2");
  auto bytes = encode_trace(random_trace(g, 10, 1));
  bytes.resize(bytes.size() - g.packet_size() * 8);  // payload for 9 packets
  const std::size_t expected = kGcsiHeaderBytes + 10 * g.packet_size() * 8;
  try {
    decode_trace(bytes);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(std::to_string(expected)), std::string::npos) << e.what();
    EXPECT_EQ(e.offset(), bytes.size());
  }
}

TEST(Gcsi, OtherCorruptions) {
  const auto good = encode_trace(random_trace(parse_geometry("1x1x2"), 3, 1));
  auto bad_version = good;
  bad_version[4] = 9;
  EXPECT_THROW(decode_trace(bad_version), ParseError);
  auto zero_sub = good;
  zero_sub[10] = 0;
  try {
    decode_trace(zero_sub);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 10u);
  }
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(decode_trace(trailing), ParseError);
  EXPECT_THROW(decode_trace(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)), ParseError);
}

TEST(Gcsi, ReadErrorsMentionThePath) {
  const auto dir = temp_dir("badfile");
  EXPECT_THROW(read_trace(dir / "missing.gcsi"), IoError);
  {
    std::ofstream(dir / "bad.gcsi") << "NOPE";
  }
  try {
    read_trace(dir / "bad.gcsi");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.gcsi"), std::string::npos);
  }
}

TEST(Manifest, RoundTripAndRelativeResolution) {
  const auto dir = temp_dir("manifest");
  Manifest m;
  m.entries = {{"a.gcsi", 0, "train"}, {"b.gcsi", 1, "val"}, {"/abs/c.gcsi", 1, "test"}};
  write_manifest(m, dir / "manifest.jsonl");
  const auto back = read_manifest(dir / "manifest.jsonl");
  ASSERT_EQ(back.entries.size(), 3u);
  EXPECT_EQ(back.entries[1].path, "b.gcsi");
  EXPECT_EQ(back.entries[1].label, 1);
  EXPECT_EQ(back.entries[1].split, "val");
  EXPECT_EQ(back.resolve(back.entries[0]), dir / "a.gcsi");
  EXPECT_EQ(back.resolve(back.entries[2]), std::filesystem::path("/abs/c.gcsi"));
}

TEST(Manifest, MalformedLineIsParseError) {
  const auto dir = temp_dir("manifest_bad");
  {
    std::ofstream out(dir / "m.jsonl");
    out << R"({"path": "a.gcsi", "label": 0, "split": "train"})" << "\n" << "{not json\n";
  }
  EXPECT_THROW(read_manifest(dir / "m.jsonl"), ParseError);
}
