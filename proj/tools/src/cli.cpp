#include "grasens/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "grasens/checkpoint.hpp"
#include "grasens/config.hpp"
#include "grasens/csi_io.hpp"
#include "grasens/errors.hpp"
#include "grasens/gabor.hpp"
#include "grasens/ops.hpp"
#include "grasens/tensor.hpp"
#include "grasens/trainer.hpp"

namespace grasens::cli {

namespace fs = std::filesystem;

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"manifest", c.manifest}, {"out", c.out},     {"segments", c.segments},
                     {"layout", c.layout},     {"model", c.model}, {"train", c.train}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  if (j.contains("manifest")) c.manifest = j.at("manifest").get<std::string>();
  if (j.contains("out")) c.out = j.at("out").get<std::string>();
  if (j.contains("segments")) merge_from_json(j.at("segments"), c.segments);
  if (j.contains("layout")) merge_from_json(j.at("layout"), c.layout);
  if (j.contains("model")) merge_from_json(j.at("model"), c.model);
  if (j.contains("train")) merge_from_json(j.at("train"), c.train);
}

RunConfig read_run_config(const fs::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  try {
    from_json(j, base);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return base;
}

BlockToggles parse_ablations(const std::string& list) {
  BlockToggles t;
  std::stringstream ss(list);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    if (token == "gabor") {
      t.gabor = false;
    } else if (token == "antialias") {
      t.antialias = false;
    } else if (token == "temporal-att") {
      t.temporal_att = false;
    } else if (token == "frequency-att") {
      t.frequency_att = false;
    } else {
      std::string valid;
      for (const auto& v : kAblationTokens) valid += (valid.empty() ? "" : ", ") + v;
      throw UsageError("unknown ablation token '" + token + "'; valid tokens: " + valid);
    }
  }
  return t;
}

std::size_t worker_threads() {
  const char* env = std::getenv("GRASENS_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw UsageError(std::string("GRASENS_THREADS must be a positive integer, got '") + env + "'");
  return static_cast<std::size_t>(v);
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

nlohmann::json run_metadata(const CsiGeometry& geometry, const RunConfig& rc) {
  return {{"geometry", geometry}, {"segments", rc.segments}, {"layout", rc.layout}};
}

// ---- generate

struct GenerateArgs {
  std::size_t classes = 4;
  std::size_t per_class = 10;
  std::string geometry = "1x2x30";
  std::size_t duration = 400;
  std::uint64_t seed = 0;
  double noise = 0.05;
  std::size_t val_every = 4;
  std::string out;
};

void cmd_generate(const GenerateArgs& a, std::ostream& out) {
  if (a.classes < 1) throw UsageError("--classes must be at least 1");
  if (a.per_class < 1) throw UsageError("--traces-per-class must be at least 1");
  const CsiGeometry geometry = parse_geometry(a.geometry);
  const fs::path dir(a.out);
  ensure_dir(dir);
  SyntheticOptions opts;
  opts.class_count = a.classes;
  opts.noise_sigma = a.noise;
  Manifest manifest;
  manifest.base_dir = dir;
  for (std::size_t c = 0; c < a.classes; ++c) {
    for (std::size_t i = 0; i < a.per_class; ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "class%02zu_trace%04zu.gcsi", c, i);
      const std::uint64_t seed = mix(a.seed ^ mix(c * a.per_class + i));
      write_trace(generate_synthetic(geometry, c, a.duration, seed, opts), dir / name);
      const bool val = a.val_every > 0 && i % a.val_every == a.val_every - 1;
      manifest.entries.push_back({name, static_cast<std::int32_t>(c), val ? "val" : "train"});
    }
  }
  write_manifest(manifest, dir / "manifest.jsonl");
  out << "wrote " << manifest.entries.size() << " traces (" << geometry.to_string() << ", " << a.duration
      << " packets) and " << (dir / "manifest.jsonl").string() << "\n";
}

// ---- segment

void cmd_segment(const std::string& manifest_path, const SegmentSpec& spec, const LayoutOptions& layout,
                 const std::string& out_path, std::ostream& out) {
  spec.validate();
  const Manifest manifest = read_manifest(manifest_path);
  std::ostringstream lines;
  std::map<std::string, std::size_t> per_split;
  for (const auto& entry : manifest.entries) {
    const CsiTrace trace = read_trace(manifest.resolve(entry));
    const std::int32_t label = entry.label >= 0 ? entry.label : trace.label.value_or(-1);
    for (const auto& w : segment(trace, spec, layout, entry.path)) {
      nlohmann::json j{{"source", w.source_trace}, {"split", entry.split},   {"label", label},
                       {"start_packet", w.start_packet}, {"shape", {w.channels, w.height, w.width}}};
      lines << j.dump() << "\n";
      ++per_split[entry.split];
    }
  }
  if (out_path.empty()) {
    out << lines.str();
  } else {
    write_text(out_path, lines.str());
    for (const auto& [split, n] : per_split) out << split << ": " << n << " windows\n";
  }
}

// ---- train

void cmd_train(RunConfig rc, std::ostream& out) {
  if (rc.manifest.empty()) throw UsageError("train needs --manifest (or a config file naming one)");
  rc.train.validate();
  const fs::path dir(rc.out);
  const Dataset data = load_dataset(read_manifest(rc.manifest), rc.segments, rc.layout);
  fit_model_to_dataset(rc.model, data);
  GraSensModel model(rc.model);
  data.split("train");
  data.split("val");

  ensure_dir(dir);
  write_text(dir / "config.json", nlohmann::json(rc).dump(2) + "\n");

  TrainHooks hooks;
  hooks.threads = worker_threads();
  hooks.on_epoch = [&](const EpochRecord& r) {
    out << "epoch " << r.epoch << " " << r.split << " loss " << fmt("%.6f", r.loss) << " accuracy "
        << fmt("%.6f", r.accuracy) << " precision_macro " << format_metric(r.precision_macro) << "\n";
  };
  const TrainResult result = train(model, data, rc.train, hooks);

  LoadedCheckpoint best = decode_checkpoint(result.best_checkpoint);
  best.state.run = run_metadata(data.geometry, rc);
  save_checkpoint(best.model, best.state, dir / "checkpoint.gckp");
  write_text(dir / "metrics.csv", metrics_csv(result.log));
  write_text(dir / "confusion.csv", confusion_csv(result.best_val.metrics));
  out << "best epoch " << result.best_epoch << " val accuracy " << fmt("%.6f", result.best_val.metrics.accuracy)
      << "; run written to " << dir.string() << "\n";
}

// ---- eval

struct RunContext {
  CsiGeometry geometry;
  SegmentSpec segments;
  LayoutOptions layout;
};

RunContext run_context(const LoadedCheckpoint& ckpt, const std::string& path) {
  const nlohmann::json& run = ckpt.state.run;
  if (!run.contains("geometry") || !run.contains("segments")) {
    throw ConfigError("checkpoint " + path + " carries no run metadata (geometry, segments)");
  }
  RunContext ctx;
  merge_from_json(run.at("geometry"), ctx.geometry);
  merge_from_json(run.at("segments"), ctx.segments);
  if (run.contains("layout")) merge_from_json(run.at("layout"), ctx.layout);
  return ctx;
}

void check_geometry(const CsiGeometry& expected, const CsiGeometry& found, const std::string& what) {
  if (!(expected == found)) {
    throw ConfigError("geometry mismatch: checkpoint was trained on " + expected.to_string() + " but " + what +
                      " has " + found.to_string());
  }
}

std::string eval_report(const std::string& split, const EvalResult& r) {
  std::string s = "metric,value\n";
  s += "split," + split + "\n";
  s += "samples," + std::to_string(r.truths.size()) + "\n";
  s += "loss," + format_metric(r.loss) + "\n";
  s += "accuracy," + format_metric(r.metrics.accuracy) + "\n";
  s += "precision_macro," + format_metric(r.metrics.precision_macro()) + "\n";
  for (std::size_t c = 0; c < r.metrics.precision.size(); ++c) {
    s += "precision[" + std::to_string(c) + "]," + format_metric(r.metrics.precision[c]) + "\n";
  }
  return s;
}

void cmd_eval(const std::string& ckpt_path, const std::string& manifest_path, const std::string& split,
              const std::string& out_dir, std::ostream& out) {
  const LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
  const RunContext ctx = run_context(ckpt, ckpt_path);
  const Dataset data = load_dataset(read_manifest(manifest_path), ctx.segments, ctx.layout);
  check_geometry(ctx.geometry, data.geometry, "manifest " + manifest_path);
  const auto& samples = data.split(split);
  const std::size_t classes = ckpt.model.config().classes;
  for (const auto& s : samples) {
    if (s.label >= classes) {
      throw ConfigError("label " + std::to_string(s.label) + " in " + s.source + " is outside the model's " +
                        std::to_string(classes) + " classes");
    }
  }
  const EvalResult r = evaluate(ckpt.model, samples, worker_threads());
  const std::string report = eval_report(split, r), confusion = confusion_csv(r.metrics);
  out << report << "\n" << confusion;
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_text(fs::path(out_dir) / "eval_metrics.csv", report);
    write_text(fs::path(out_dir) / "eval_confusion.csv", confusion);
  }
}

// ---- infer

void cmd_infer(const std::string& ckpt_path, const std::vector<std::string>& traces, std::ostream& out) {
  const LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
  const RunContext ctx = run_context(ckpt, ckpt_path);
  const std::size_t classes = ckpt.model.config().classes;
  out << "source,start_packet,prediction";
  for (std::size_t c = 0; c < classes; ++c) out << ",p" << c;
  out << "\n";
  NoGradGuard guard;
  for (const auto& path : traces) {
    const CsiTrace trace = read_trace(path);
    check_geometry(ctx.geometry, trace.geometry, "trace " + path);
    for (const auto& w : segment(trace, ctx.segments, ctx.layout, path)) {
      const Tensor logits = ckpt.model.forward(w);
      const auto z = logits.data();
      const double top = *std::max_element(z.begin(), z.end());
      std::vector<double> p(z.size());
      double norm = 0.0;
      for (std::size_t c = 0; c < z.size(); ++c) norm += p[c] = std::exp(z[c] - top);
      out << path << "," << w.start_packet << "," << argmax(z);
      for (double v : p) out << "," << fmt("%.6f", v / norm);
      out << "\n";
    }
  }
}

// ---- inspect-filters

void cmd_inspect_filters(const std::string& ckpt_path, const std::string& out_dir, std::size_t channel,
                         std::ostream& out) {
  const LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
  const fs::path dir(out_dir);
  ensure_dir(dir);
  std::string params = "block,filter,channel,omega,theta,psi,sigma\n";
  std::size_t files = 0;
  const auto& blocks = ckpt.model.blocks();
  for (std::size_t mu = 0; mu < blocks.size(); ++mu) {
    const GaborLayer& layer = blocks[mu].gabor;
    if (channel >= layer.in_channels()) {
      throw UsageError("--channel " + std::to_string(channel) + " out of range; the Gabor layers have " +
                       std::to_string(layer.in_channels()) + " input channels");
    }
    const std::size_t k = layer.kernel_size;
    for (std::size_t f = 0; f < layer.out_channels(); ++f) {
      for (std::size_t c = 0; c < layer.in_channels(); ++c) {
        const GaborParams p = layer.params(f, c);
        params += std::to_string(mu) + "," + std::to_string(f) + "," + std::to_string(c) + "," +
                  fmt("%.17g", p.omega) + "," + fmt("%.17g", p.theta) + "," + fmt("%.17g", p.psi) + "," +
                  fmt("%.17g", p.sigma) + "\n";
      }
      const Tensor kernel = synthesize_kernel(layer.params(f, channel), k);
      std::string grid;
      for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t col = 0; col < k; ++col) grid += (col ? "," : "") + fmt("%.17g", kernel.data()[r * k + col]);
        grid += "\n";
      }
      char name[64];
      std::snprintf(name, sizeof name, "block%zu_filter%02zu.csv", mu, f);
      write_text(dir / name, grid);
      ++files;
    }
  }
  write_text(dir / "params.csv", params);
  out << "wrote " << files << " filter grids (input channel " << channel << ") and params.csv to " << dir.string()
      << "\n";
}

// ---- dispatch

int report(std::ostream& err, const char* kind, const std::string& what, int code) {
  std::string line = what;
  std::replace(line.begin(), line.end(), '\n', ' ');
  err << "error[" << kind << "]: " << line << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"GraSens: Gabor, anti-aliasing and fractal attention for WiFi CSI activity recognition", "grasens"};
  app.require_subcommand(1);
  // A repeated flag takes its last value.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write synthetic GCSI traces and a manifest");
  generate->add_option("--classes", gen.classes, "Number of activity classes")->capture_default_str();
  generate->add_option("--traces-per-class", gen.per_class, "Traces per class")->capture_default_str();
  generate->add_option("--geometry", gen.geometry, "Antenna/subcarrier geometry NTxNRxNS")->capture_default_str();
  generate->add_option("--duration", gen.duration, "Packets per trace")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  generate->add_option("--noise", gen.noise, "Receiver noise standard deviation")->capture_default_str();
  generate->add_option("--val-every", gen.val_every, "Every n-th trace of a class goes to the val split (0: none)")
      ->capture_default_str();
  generate->add_option("--out", gen.out, "Output directory")->required();

  std::string seg_manifest, seg_out;
  SegmentSpec seg_spec;
  bool seg_phase = false;
  auto* segment_cmd = app.add_subcommand("segment", "List the windows a manifest yields as JSONL");
  segment_cmd->add_option("--manifest", seg_manifest, "Dataset manifest (JSONL)")->required();
  segment_cmd->add_option("--phi", seg_spec.phi, "Window length in packets")->capture_default_str();
  segment_cmd->add_option("--upsilon", seg_spec.upsilon, "Hop between windows in packets")->capture_default_str();
  segment_cmd->add_flag("--phase-diff", seg_phase, "Append inter-antenna phase-difference channels");
  segment_cmd->add_option("--out", seg_out, "Write JSONL here instead of stdout");

  std::optional<std::string> t_config, t_manifest, t_out, t_ablate, t_blur;
  std::optional<std::size_t> t_lambda, t_width, t_phi, t_upsilon, t_epochs, t_batch;
  std::optional<double> t_lr, t_momentum;
  std::optional<std::uint64_t> t_seed;
  bool t_phase = false, t_frozen = false, t_no_task_blur = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a run directory");
  train_cmd->add_option("--config", t_config, "Run config JSON; flags override its values");
  train_cmd->add_option("--manifest", t_manifest, "Dataset manifest (JSONL)");
  train_cmd->add_option("--lambda", t_lambda, "Number of stacked blocks");
  train_cmd->add_option("--width", t_width, "Channels per block");
  train_cmd->add_option("--phi", t_phi, "Window length in packets");
  train_cmd->add_option("--upsilon", t_upsilon, "Hop between windows in packets");
  train_cmd->add_option("--epochs", t_epochs, "Training epochs");
  train_cmd->add_option("--batch-size", t_batch, "Mini-batch size");
  train_cmd->add_option("--lr", t_lr, "Learning rate");
  train_cmd->add_option("--momentum", t_momentum, "Momentum coefficient");
  train_cmd->add_option("--seed", t_seed, "Seed for initialization and data order");
  train_cmd->add_option("--ablate", t_ablate, "Comma list of parts to disable: gabor,antialias,temporal-att,frequency-att");
  train_cmd->add_option("--blur-mode", t_blur, "fixed-binomial or predicted");
  train_cmd->add_flag("--phase-diff", t_phase, "Append inter-antenna phase-difference channels");
  train_cmd->add_flag("--gabor-frozen,--freeze-gabor", t_frozen, "Keep the Gabor parameters at their initial grid");
  train_cmd->add_flag("--no-task-blur", t_no_task_blur, "Skip the [1,2,1]/4 smoothing of the logits");
  train_cmd->add_option("--out", t_out, "Run directory");

  std::string e_ckpt, e_manifest, e_split = "val", e_out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on one manifest split");
  eval_cmd->add_option("--checkpoint", e_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--manifest", e_manifest, "Dataset manifest (JSONL)")->required();
  eval_cmd->add_option("--split", e_split, "Split name")->capture_default_str();
  eval_cmd->add_option("--out", e_out, "Also write eval_metrics.csv and eval_confusion.csv here");

  std::string i_ckpt;
  std::vector<std::string> i_traces;
  auto* infer_cmd = app.add_subcommand("infer", "Classify every window of one or more GCSI traces");
  infer_cmd->add_option("--checkpoint", i_ckpt, "Checkpoint file")->required();
  infer_cmd->add_option("--trace", i_traces, "GCSI trace file(s)")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  std::string f_ckpt, f_out;
  std::size_t f_channel = 0;
  auto* inspect_cmd = app.add_subcommand("inspect-filters", "Dump Gabor kernels and parameters as CSV");
  inspect_cmd->add_option("--checkpoint", f_ckpt, "Checkpoint file")->required();
  inspect_cmd->add_option("--out", f_out, "Output directory")->required();
  inspect_cmd->add_option("--channel", f_channel, "Input channel whose kernels are written")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return report(err, "usage", e.what(), kExitUsage);
  }

  try {
    if (generate->parsed()) {
      cmd_generate(gen, out);
    } else if (segment_cmd->parsed()) {
      cmd_segment(seg_manifest, seg_spec, LayoutOptions{seg_phase}, seg_out, out);
    } else if (train_cmd->parsed()) {
      RunConfig rc;
      if (t_config) rc = read_run_config(*t_config, rc);
      if (t_manifest) rc.manifest = *t_manifest;
      if (t_out) rc.out = *t_out;
      if (t_lambda) rc.model.lambda = *t_lambda;
      if (t_width) rc.model.block.width = *t_width;
      if (t_phi) rc.segments.phi = *t_phi;
      if (t_upsilon) rc.segments.upsilon = *t_upsilon;
      if (t_epochs) rc.train.epochs = *t_epochs;
      if (t_batch) rc.train.batch_size = *t_batch;
      if (t_lr) rc.train.lr = *t_lr;
      if (t_momentum) rc.train.momentum = *t_momentum;
      if (t_seed) rc.model.seed = rc.train.seed = *t_seed;
      if (t_ablate) rc.model.block.toggles = parse_ablations(*t_ablate);
      if (t_blur) merge_from_json(nlohmann::json{{"mode", *t_blur}}, rc.model.block.blur);
      if (t_phase) rc.layout.append_phase_difference = true;
      if (t_frozen) rc.model.block.gabor_frozen = true;
      if (t_no_task_blur) rc.model.task_blur = false;
      cmd_train(rc, out);
    } else if (eval_cmd->parsed()) {
      cmd_eval(e_ckpt, e_manifest, e_split, e_out, out);
    } else if (infer_cmd->parsed()) {
      cmd_infer(i_ckpt, i_traces, out);
    } else if (inspect_cmd->parsed()) {
      cmd_inspect_filters(f_ckpt, f_out, f_channel, out);
    }
  } catch (const UsageError& e) {
    return report(err, "usage", e.what(), kExitUsage);
  } catch (const ConfigError& e) {
    return report(err, "config", e.what(), kExitUsage);
  } catch (const ParseError& e) {
    return report(err, "parse", e.what(), kExitData);
  } catch (const IoError& e) {
    return report(err, "io", e.what(), kExitData);
  } catch (const DivergenceError& e) {
    return report(err, "divergence", e.what(), kExitDivergence);
  } catch (const std::exception& e) {
    return report(err, "internal", e.what(), 1);
  }
  return kExitOk;
}

}  // namespace grasens::cli
