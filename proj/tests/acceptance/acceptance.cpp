// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments pick
// a subset, e.g. `acceptance 2 8`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "grasens/antialias.hpp"
#include "grasens/checkpoint.hpp"
#include "grasens/csi.hpp"
#include "grasens/csi_io.hpp"
#include "grasens/errors.hpp"
#include "grasens/fractal.hpp"
#include "grasens/gabor.hpp"
#include "grasens/network.hpp"
#include "grasens/ops.hpp"
#include "grasens/trainer.hpp"
#include "oracles.hpp"

using namespace grasens;
using grasens::testing::brute_force_box_count;
using grasens::testing::grad_check;
using grasens::testing::least_squares_classify;
using grasens::testing::randn;
using grasens::testing::random_readout;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---- 1. gradient suite

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  double worst_op = 0.0;
  std::string worst_name;
  std::size_t checks = 0;
  std::vector<std::string> failed;
  auto check = [&](const std::string& name, const std::function<Tensor()>& loss, std::vector<Tensor> leaves,
                   std::uint64_t seed) {
    const auto r = grad_check(loss, std::move(leaves), 1e-5, 48, seed);
    ++checks;
    if (r.max_rel_err > worst_op) {
      worst_op = r.max_rel_err;
      worst_name = name;
    }
    if (!(r.max_rel_err < 1e-4)) failed.push_back(name + "#" + std::to_string(seed));
  };

  for (std::uint64_t s = 0; s < 5; ++s) {
    Tensor x = randn({3, 7, 6}, s), y = randn({3, 7, 6}, s + 50);
    Tensor k = randn({4, 3, 3, 3}, s + 1), kd = randn({3, 2, 4, 4}, s + 2);
    Tensor cb = randn({3, 1, 1}, s + 3), sp = randn({1, 7, 6}, s + 4);
    check("conv2d", [&] { return random_readout(conv2d(x, k, 1 + s % 2, 1), s); }, {x, k}, s);
    check("deconv2d", [&] { return random_readout(deconv2d(x, kd, 2), s); }, {x, kd}, s);
    check("add", [&] { return random_readout(add(add(add(x, y), cb), add(sp, x)), s); }, {x, y, cb, sp}, s);
    check("mul", [&] { return random_readout(mul(mul(x, y), mul(x, cb)), s); }, {x, y, cb}, s);
    check("mul_spatial", [&] { return random_readout(mul(sp, x), s); }, {x, sp}, s);
    check("scale", [&] { return random_readout(scale(x, -1.7), s); }, {x}, s);
    check("sigmoid", [&] { return random_readout(sigmoid(x), s); }, {x}, s);
    check("relu", [&] { return random_readout(relu(x), s); }, {x}, s);
    check("sum_mean", [&] { return add(scale(sum(mul(x, x)), 0.5), mean(x)); }, {x}, s);
    check("concat_slice", [&] { return random_readout(slice_channels(concat_channels(x, y), 2, 3), s); }, {x, y}, s);
    check("reshape", [&] { return random_readout(reshape(x, {6, 7, 3}), s); }, {x}, s);
    check("global_avg_pool", [&] { return random_readout(global_avg_pool(x), s); }, {x}, s);
    Tensor v = randn({6}, s + 5), w = randn({4, 6}, s + 6), b = randn({4}, s + 7);
    check("linear", [&] { return random_readout(linear(v, w, b), s); }, {v, w, b}, s);
    check("smooth1d", [&] { return random_readout(smooth1d(v, std::vector<double>{0.25, 0.5, 0.25}), s); }, {v}, s);
    check("softmax_cross_entropy", [&] { return softmax_cross_entropy(v, s % 6); }, {v}, s);
    check("pad_reflect", [&] { return random_readout(pad_reflect(x, 1 + s % 3), s); }, {x}, s);
    check("depthwise_filter", [&] { return random_readout(depthwise_filter(x, binomial_kernel(3), 3), s); }, {x}, s);
    check("subsample", [&] { return random_readout(subsample(x, 2), s); }, {x}, s);
    Tensor logits = randn({18, 5, 4}, s + 8);
    check("softmax_groups", [&] { return random_readout(softmax_groups(logits, 9), s); }, {logits}, s);
    Tensor padded = randn({4, 7, 6}, s + 9), filt = randn({18, 5, 4}, s + 10);
    check("local_filter", [&] { return random_readout(local_filter(padded, filt, 3, 2), s); }, {padded, filt}, s);

    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> u(0.3, 2.0);
    std::vector<double> om(6), th(6), ps(6), sg(6);
    for (std::size_t i = 0; i < 6; ++i) om[i] = u(rng), th[i] = u(rng), ps[i] = u(rng), sg[i] = u(rng) + 0.5;
    Tensor tom = Tensor::from_data({3, 2}, om, true), tth = Tensor::from_data({3, 2}, th, true);
    Tensor tps = Tensor::from_data({3, 2}, ps, true), tsg = Tensor::from_data({3, 2}, sg, true);
    check("gabor_bank", [&] { return random_readout(gabor_bank(tom, tth, tps, tsg, 5), s); }, {tom, tth, tps, tsg}, s);

    BlurSpec fixed;
    fixed.stride = 2;
    check("blur_fixed", [&] { return random_readout(blur(x, fixed), s); }, {x}, s);
    BlurSpec pred = fixed;
    pred.mode = BlurMode::kPredicted;
    FilterPredictor fp{randn({9, 3, 1, 1}, s + 11, true, 0.5), randn({9, 1, 1}, s + 12)};
    check("blur_predicted", [&] { return random_readout(blur(x, pred, &fp), s); }, {x, fp.weights, fp.bias}, s);

    Tensor f = randn({6, 8, 8}, s + 13);
    auto att_t = make_temporal_attention(6, 2, s + 14);
    auto att_f = make_frequency_attention(s + 15);
    FdTape tape;
    bool first = true;
    check("fd_attention",
          [&] {
            if (!first) tape.replay();
            first = false;
            return random_readout(apply_attention(f, att_t, att_f, FdSpec{}, &tape), s);
          },
          {f, att_t.w1, att_t.b1, att_t.w2, att_t.b2, att_f.kernel, att_f.bias}, s);
  }

  ModelConfig cfg;
  cfg.lambda = 2;
  cfg.block.width = 4;
  cfg.block.reduction = 2;
  cfg.classes = 3;
  cfg.in_channels = 4;
  cfg.in_height = 16;
  cfg.in_width = 16;
  cfg.seed = 3;
  const GraSensModel model(cfg);
  {
    Tensor x = randn({4, 8, 8}, 21);
    ModelConfig gcfg = cfg;
    gcfg.in_height = gcfg.in_width = 8;
    const GraSensModel gm(gcfg);
    std::vector<Tensor> leaves{x};
    for (const auto& p : gm.named_parameters())
      if (p.name.starts_with("gen.")) leaves.push_back(p.value);
    check("generation_stage", [&] { return random_readout(gm.generation_stage(x), 21); }, leaves, 21);
  }
  {
    Tensor f1 = randn({4, 16, 16}, 22);
    std::vector<Tensor> leaves{f1};
    for (const auto& p : model.trainable_parameters())
      if (p.name.starts_with("block0.")) leaves.push_back(p.value);
    FdTape tape;
    bool first = true;
    const auto r = grad_check(
        [&] {
          if (!first) tape.replay();
          first = false;
          return random_readout(model.block_forward(0, f1, &tape), 22);
        },
        leaves, 1e-5, 12, 22);
    ++checks;
    if (r.max_rel_err > worst_op) worst_op = r.max_rel_err, worst_name = "block";
    if (!(r.max_rel_err < 1e-4)) failed.push_back("block");
  }

  Tensor x = randn({4, 16, 16}, 23);
  std::vector<Tensor> leaves{x};
  for (const auto& p : model.trainable_parameters()) leaves.push_back(p.value);
  FdTape tape;
  bool first = true;
  const auto full = grad_check(
      [&] {
        if (!first) tape.replay();
        first = false;
        return classification_loss(model.forward(x, &tape), 1);
      },
      leaves, 1e-5, 8, 23);
  ++checks;

  const double t = seconds_since(t0);
  Outcome o;
  o.pass = failed.empty() && full.max_rel_err < 1e-3 && t < 60.0;
  o.detail = std::to_string(checks) + " checks, worst per-op rel err " + fmt("%.2e", worst_op) + " (" + worst_name +
             "), full model " + fmt("%.2e", full.max_rel_err) + " over " + std::to_string(full.probes) +
             " probes, " + fmt("%.1f", t) + " s (limit 60 s)";
  if (!failed.empty()) o.detail += "; failing: " + failed.front();
  return o;
}

// ---- 2. Gabor init exactness

Outcome gabor_init() {
  const double pi = std::numbers::pi;
  const GaborLayer layer = init_grid(3, 5, 17);
  double worst = 0.0, worst_centre = 0.0;
  std::set<std::pair<double, double>> pairs;
  bool psi_ok = true;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (std::size_t m = 1; m <= 8; ++m) {
      const std::size_t f = 8 * (n - 1) + (m - 1);
      const double omega = (pi / 2) * std::pow(std::sqrt(2.0), -static_cast<double>(n - 1));
      const double theta = (pi / 8) * static_cast<double>(m - 1);
      for (std::size_t c = 0; c < layer.in_channels(); ++c) {
        GaborParams p = layer.params(f, c);
        pairs.insert({p.omega, p.theta});
        worst = std::max({worst, std::abs(p.omega - omega), std::abs(p.theta - theta), std::abs(p.sigma - pi / omega)});
        psi_ok = psi_ok && p.psi >= 0.0 && p.psi < pi;
        p.psi = 0.0;
        worst_centre = std::max(worst_centre, std::abs(synthesize_kernel(p, 5).data()[12] - 1.0));
      }
    }
  }
  Outcome o;
  o.pass = layer.out_channels() == 40 && pairs.size() == 40 && worst <= 1e-12 && worst_centre == 0.0 && psi_ok;
  o.detail = std::to_string(pairs.size()) + " distinct (omega, theta) pairs, max grid/sigma deviation " +
             fmt("%.1e", worst) + ", centre at psi=0 off by " + fmt("%.1e", worst_centre) +
             (psi_ok ? ", psi in [0, pi)" : ", psi out of range");
  return o;
}

// ---- 3. shift consistency

Outcome shift_consistency_check() {
  const auto t0 = Clock::now();
  BlurSpec spec;
  spec.stride = 2;
  double blurred = 0.0, naive = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Tensor x = randn({3, 16, 16}, seed + 1000, false);
    blurred += shift_consistency(x, [&](const Tensor& t) { return blur(t, spec); });
    naive += shift_consistency(x, [](const Tensor& t) { return subsample(t, 2); });
  }
  blurred /= 50;
  naive /= 50;
  const double t = seconds_since(t0);
  return {blurred > naive && t < 30.0, "mean cosine blur-downsample " + fmt("%.4f", blurred) + " vs naive subsample " +
                                           fmt("%.4f", naive) + ", " + fmt("%.2f", t) + " s (limit 30 s)"};
}

// ---- 4. FD oracle suite

std::vector<double> uniform_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

std::vector<double> box_blur5(const std::vector<double>& v, std::size_t n) {
  std::vector<double> out(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      double s = 0.0;
      for (int dr = -2; dr <= 2; ++dr)
        for (int dc = -2; dc <= 2; ++dc)
          s += v[reflect_index(static_cast<std::ptrdiff_t>(r) + dr, n) * n +
                 reflect_index(static_cast<std::ptrdiff_t>(c) + dc, n)];
      out[r * n + c] = s / 25.0;
    }
  return out;
}

Outcome fd_oracles() {
  const FdSpec spec;
  const double flat = estimate_fd(std::vector<double>(32 * 32, 0.4), 32, 32, spec);
  std::vector<double> line(64);
  for (std::size_t i = 0; i < 64; ++i) line[i] = 0.1 * static_cast<double>(i);
  const double line_fd = estimate_fd(line, 1, 64, spec);
  int rougher = 0;
  double affine = 0.0, oracle = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto noise = uniform_noise(64 * 64, seed);
    const double raw = estimate_fd(noise, 64, 64, spec);
    rougher += estimate_fd(box_blur5(noise, 64), 64, 64, spec) < raw ? 1 : 0;
    std::vector<double> w(noise.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 3.5 * noise[i] - 11.0;
    affine = std::max(affine, std::abs(estimate_fd(w, 64, 64, spec) - raw));
    oracle = std::max(oracle, std::abs(brute_force_box_count(noise, 64, 64, spec.scales).fd - raw));
  }
  Outcome o;
  o.pass = flat == 2.0 && std::abs(line_fd - 1.0) <= 0.1 && rougher == 20 && affine <= 1e-9 && oracle <= 1e-12;
  o.detail = "constant map " + fmt("%.17g", flat) + ", line " + fmt("%.4f", line_fd) + ", blurred < raw in " +
             std::to_string(rougher) + "/20 seeds, affine drift " + fmt("%.1e", affine) + ", brute-force gap " +
             fmt("%.1e", oracle);
  return o;
}

// ---- shared synthetic data

Dataset synthetic(const std::string& geometry, std::size_t classes, std::size_t per_class, std::size_t phi,
                  std::uint64_t seed) {
  Dataset data;
  data.geometry = parse_geometry(geometry);
  SyntheticOptions opts;
  opts.class_count = classes;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      const CsiTrace trace = generate_synthetic(data.geometry, c, phi, seed + i * classes + c, opts);
      for (const auto& w : segment(trace, {phi, phi})) {
        data.splits[i % 4 == 3 ? "val" : "train"].push_back({to_tensor(w), c, "synthetic", w.start_packet});
      }
    }
  }
  return data;
}

ModelConfig desk_model(const Dataset& data, std::size_t width) {
  ModelConfig cfg;
  cfg.lambda = 2;
  cfg.block.width = width;
  cfg.seed = 1;
  fit_model_to_dataset(cfg, data);
  return cfg;
}

// ---- 5. ablation direction

Outcome ablation_direction() {
  const auto t0 = Clock::now();
  const Dataset data = synthetic("1x2x8", 4, 200, 16, 5000);
  const TrainConfig tc{0.01, 0.9, 6, 4, 2};
  struct Variant {
    const char* name;
    BlockToggles toggles;
  };
  const std::vector<Variant> variants{{"full", {}},
                                      {"-gabor", {false, true, true, true}},
                                      {"-antialias", {true, false, true, true}},
                                      {"-temporal-att", {true, true, false, true}},
                                      {"-frequency-att", {true, true, true, false}}};
  std::vector<double> acc;
  std::string detail;
  for (const auto& v : variants) {
    ModelConfig cfg = desk_model(data, 4);
    cfg.block.toggles = v.toggles;
    GraSensModel model(cfg);
    const TrainResult r = train(model, data, tc);
    acc.push_back(r.best_val.metrics.accuracy);
    detail += std::string(detail.empty() ? "" : ", ") + v.name + " " + fmt("%.3f", acc.back());
  }
  const double best_ablation = *std::max_element(acc.begin() + 1, acc.end());
  const double t = seconds_since(t0);
  return {acc[0] >= best_ablation - 0.02 && t < 600.0,
          "val accuracy " + detail + "; " + std::to_string(data.split("train").size()) + " train / " +
              std::to_string(data.split("val").size()) + " val windows, " + fmt("%.0f", t) + " s (limit 600 s)"};
}

// ---- 6. synthetic training

double least_squares_accuracy(const Dataset& data) {
  auto features = [](const Sample& s) {
    const std::size_t c = s.input.dim(0), h = s.input.dim(1), w = s.input.dim(2);
    std::vector<double> f(h, 0.0);
    for (std::size_t k = 0; k < c; ++k)
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t x = 0; x < w; ++x) f[r] += s.input.data()[(k * h + r) * w + x] / static_cast<double>(c * w);
    return f;
  };
  std::vector<std::vector<double>> train, test;
  std::vector<std::size_t> labels, truths;
  for (const auto& s : data.split("train")) train.push_back(features(s)), labels.push_back(s.label);
  for (const auto& s : data.split("val")) test.push_back(features(s)), truths.push_back(s.label);
  const auto pred = least_squares_classify(train, labels, test, 2, 1e-3);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truths[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

Outcome synthetic_training() {
  const Dataset data = synthetic("1x2x8", 2, 40, 16, 9000);
  const double ls = least_squares_accuracy(data);
  const TrainConfig tc{0.01, 0.9, 30, 4, 3};
  GraSensModel a(desk_model(data, 8)), b(desk_model(data, 8));
  const TrainResult ra = train(a, data, tc);
  const TrainResult rb = train(b, data, tc);
  std::size_t first_hit = 0;
  for (const auto& rec : ra.log) {
    if (rec.split == "val" && rec.accuracy >= 0.95) {
      first_hit = rec.epoch;
      break;
    }
  }
  const bool same = metrics_csv(ra.log) == metrics_csv(rb.log);
  Outcome o;
  o.pass = ls >= 0.90 && first_hit >= 1 && same;
  o.detail = "least-squares oracle " + fmt("%.3f", ls) + ", network best val " +
             fmt("%.3f", ra.best_val.metrics.accuracy) +
             (first_hit ? " (>= 0.95 first at epoch " + std::to_string(first_hit) + ")" : " (never >= 0.95)") +
             ", same-seed metrics CSV " + (same ? "identical" : "DIFFERENT");
  return o;
}

// ---- 7. lambda sweep

Outcome lambda_sweep() {
  const Dataset data = synthetic("1x2x8", 3, 4, 16, 12000);
  std::string detail;
  bool ok = true;
  for (std::size_t lambda : {1u, 2u, 4u}) {
    ModelConfig cfg = desk_model(data, 4);
    cfg.lambda = lambda;
    GraSensModel model(cfg);
    const Tensor& x = data.split("train")[0].input;
    Tensor f = model.generation_stage(x);
    bool shapes = f.shape() == Shape{4, 16, 32};
    for (std::size_t mu = 0; mu < lambda; ++mu) {
      const Shape expect{4, (f.dim(1) + 1) / 2, (f.dim(2) + 1) / 2};
      f = model.block_forward(mu, f);
      shapes = shapes && f.shape() == expect;
    }
    shapes = shapes && model.forward(x).shape() == Shape{3};
    const TrainResult r = train(model, data, {0.01, 0.9, 1, 4, 1});
    const bool finite = std::isfinite(r.log.back().loss);
    ok = ok && shapes && finite;
    detail += std::string(detail.empty() ? "" : ", ") + "lambda " + std::to_string(lambda) + ": final map " +
              to_string(f.shape()) + (shapes ? "" : " (bad shape)") + (finite ? "" : " (non-finite)");
  }
  return {ok, detail};
}

// ---- 8. round trips and corruption

template <typename F>
bool throws_parse_at(F&& f, std::uint64_t offset) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.offset() == offset;
  }
  return false;
}

Outcome round_trips() {
  const auto dir = std::filesystem::temp_directory_path() / "grasens_acceptance";
  std::filesystem::create_directories(dir);
  const CsiTrace trace = generate_synthetic(parse_geometry("2x2x30"), 1, 50, 77);
  write_trace(trace, dir / "t.gcsi");
  const CsiTrace back = read_trace(dir / "t.gcsi");
  const auto bytes = encode_trace(trace);
  const bool gcsi_ok = encode_trace(back) == bytes && back.geometry == trace.geometry && back.label == trace.label &&
                       std::equal(back.packets.begin(), back.packets.end(), trace.packets.begin(), trace.packets.end(),
                                  [](ComplexF a, ComplexF b) { return a.real() == b.real() && a.imag() == b.imag(); });

  ModelConfig cfg;
  cfg.lambda = 2;
  cfg.block.width = 4;
  cfg.in_channels = 2;
  cfg.in_height = 8;
  cfg.in_width = 8;
  cfg.block.blur.mode = BlurMode::kPredicted;
  const GraSensModel model(cfg);
  TrainingState state;
  state.epoch = 3;
  save_checkpoint(model, state, dir / "m.gckp");
  const LoadedCheckpoint loaded = load_checkpoint(dir / "m.gckp");
  const Tensor x = randn({2, 8, 8}, 5, false);
  const Tensor ya = model.forward(x), yb = loaded.model.forward(x);
  const bool ckpt_ok = std::equal(ya.data().begin(), ya.data().end(), yb.data().begin(), yb.data().end());
  std::filesystem::remove_all(dir);

  int corrupt_ok = 0;
  auto g = bytes;
  g[0] = 'X';
  corrupt_ok += throws_parse_at([&] { decode_trace(g); }, 0);
  g = bytes;
  g[4] = 7;
  corrupt_ok += throws_parse_at([&] { decode_trace(g); }, 4);
  g = bytes;
  g[10] = g[11] = 0;
  corrupt_ok += throws_parse_at([&] { decode_trace(g); }, 10);
  g = bytes;
  g.resize(g.size() - 3);
  corrupt_ok += throws_parse_at([&] { decode_trace(g); }, g.size());
  const auto cb = encode_checkpoint(model, state);
  auto c = cb;
  c[0] = 'X';
  corrupt_ok += throws_parse_at([&] { decode_checkpoint(c); }, 0);
  c = cb;
  c[4] = 2;
  corrupt_ok += throws_parse_at([&] { decode_checkpoint(c); }, 4);
  c = cb;
  c[15] = 0x40;
  corrupt_ok += throws_parse_at([&] { decode_checkpoint(c); }, 8);
  c = cb;
  c[16] = '!';
  corrupt_ok += throws_parse_at([&] { decode_checkpoint(c); }, 16);

  return {gcsi_ok && ckpt_ok && corrupt_ok == 8,
          std::string("GCSI round trip ") + (gcsi_ok ? "bit-exact" : "DIFFERS") + ", checkpoint forward " +
              (ckpt_ok ? "bit-exact" : "DIFFERS") + ", " + std::to_string(corrupt_ok) +
              "/8 corruptions raised parse errors at the expected offset"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", gradient_suite},
      {"gabor init exactness", gabor_init},
      {"anti-aliasing shift consistency", shift_consistency_check},
      {"fractal dimension oracles", fd_oracles},
      {"ablation direction at desk scale", ablation_direction},
      {"synthetic training", synthetic_training},
      {"lambda sweep", lambda_sweep},
      {"round trips and corruption", round_trips}};
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::atoi(argv[i])));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
