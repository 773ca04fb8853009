#include "grasens/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <thread>

#include "grasens/checkpoint.hpp"
#include "grasens/errors.hpp"
#include "grasens/ops.hpp"

namespace grasens {

const std::vector<Sample>& Dataset::split(const std::string& name) const {
  const auto it = splits.find(name);
  if (it == splits.end() || it->second.empty()) throw ConfigError("dataset has no samples in split '" + name + "'");
  return it->second;
}

std::size_t Dataset::class_count() const {
  std::size_t classes = 0;
  for (const auto& [name, samples] : splits) {
    for (const auto& s : samples) classes = std::max(classes, s.label + 1);
  }
  return classes;
}

Shape Dataset::input_shape() const {
  for (const auto& [name, samples] : splits) {
    if (!samples.empty()) return samples.front().input.shape();
  }
  throw ConfigError("dataset is empty");
}

Dataset load_dataset(const Manifest& manifest, const SegmentSpec& segments, const LayoutOptions& layout) {
  segments.validate();
  if (manifest.entries.empty()) throw ConfigError("manifest lists no traces");
  Dataset data;
  std::optional<CsiGeometry> geometry;
  for (const auto& entry : manifest.entries) {
    const auto path = manifest.resolve(entry);
    const CsiTrace trace = read_trace(path);
    if (!geometry) {
      geometry = trace.geometry;
    } else if (!(trace.geometry == *geometry)) {
      throw ConfigError("trace " + path.string() + " has geometry " + trace.geometry.to_string() +
                        ", earlier traces have " + geometry->to_string());
    }
    std::optional<std::int32_t> label = entry.label >= 0 ? std::optional<std::int32_t>(entry.label) : trace.label;
    if (!label) throw ConfigError("trace " + path.string() + " has no class label");
    auto& bucket = data.splits[entry.split];
    for (auto& window : segment(trace, segments, layout, entry.path)) {
      bucket.push_back({to_tensor(window), static_cast<std::size_t>(*label), window.source_trace, window.start_packet});
    }
  }
  data.geometry = *geometry;
  return data;
}

void fit_model_to_dataset(ModelConfig& config, const Dataset& data) {
  const Shape shape = data.input_shape();
  config.in_channels = shape[0];
  config.in_height = shape[1];
  config.in_width = shape[2];
  config.classes = std::max<std::size_t>(data.class_count(), 2);
}

EvalResult evaluate(const GraSensModel& model, std::span<const Sample> samples, std::size_t threads) {
  if (samples.empty()) throw UsageError("evaluate needs at least one sample");
  std::vector<double> losses(samples.size());
  std::vector<std::size_t> predictions(samples.size());
  const auto run = [&](std::size_t begin, std::size_t step) {
    NoGradGuard guard;
    for (std::size_t i = begin; i < samples.size(); i += step) {
      const Tensor logits = model.forward(samples[i].input);
      losses[i] = classification_loss(logits, samples[i].label).item();
      predictions[i] = argmax(logits.data());
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, samples.size());
  if (threads == 1) {
    run(0, 1);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) workers.emplace_back(run, t, threads);
  }

  EvalResult result;
  result.truths.reserve(samples.size());
  for (const auto& s : samples) result.truths.push_back(s.label);
  double total = 0.0;
  for (double l : losses) total += l;
  result.loss = total / static_cast<double>(samples.size());
  result.predictions = std::move(predictions);
  result.metrics = compute_metrics(result.predictions, result.truths, model.config().classes);
  return result;
}

namespace {

bool better(const EvalResult& candidate, const EvalResult& best) {
  if (candidate.metrics.accuracy != best.metrics.accuracy) return candidate.metrics.accuracy > best.metrics.accuracy;
  return candidate.loss < best.loss;
}

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

}  // namespace

TrainResult train(GraSensModel& model, const Dataset& data, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  const auto& train_set = data.split("train");
  const auto& val_set = data.split("val");
  for (const auto* set : {&train_set, &val_set}) {
    for (const auto& s : *set) {
      if (s.label >= model.config().classes) {
        throw ConfigError("label " + std::to_string(s.label) + " exceeds the model's " +
                          std::to_string(model.config().classes) + " classes");
      }
    }
  }

  std::vector<NamedParameter> params = model.trainable_parameters();
  SgdMomentum optimizer(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::uint64_t step = 0;
  TrainResult result;
  bool have_best = false;

  const auto emit = [&](EpochRecord rec) {
    if (hooks.on_epoch) hooks.on_epoch(rec);
    result.log.push_back(std::move(rec));
  };

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    double loss_total = 0.0;
    std::vector<std::size_t> preds;
    std::vector<std::size_t> truths;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      ++step;
      optimizer.zero_grad(params);
      for (std::size_t b = start; b < end; ++b) {
        const Sample& s = train_set[order[b]];
        const Tensor logits = model.forward(s.input);
        const Tensor loss = classification_loss(logits, s.label);
        if (!std::isfinite(loss.item())) {
          throw DivergenceError("non-finite loss at optimizer step " + std::to_string(step) + " (epoch " +
                                    std::to_string(epoch) + ", sample " + s.source + "@" +
                                    std::to_string(s.start_packet) + ")",
                                step);
        }
        scale(loss, inv_batch).backward();
        loss_total += loss.item();
        preds.push_back(argmax(logits.data()));
        truths.push_back(s.label);
      }
      optimizer.step(params);
      for (const auto& p : params) {
        if (!p.value.all_finite()) {
          throw DivergenceError("parameter " + p.name + " became non-finite at optimizer step " + std::to_string(step),
                                step);
        }
      }
    }

    const auto train_metrics = compute_metrics(preds, truths, model.config().classes);
    emit({epoch, "train", loss_total / static_cast<double>(order.size()), train_metrics.accuracy,
          train_metrics.precision_macro()});

    EvalResult val = evaluate(model, val_set, hooks.threads);
    emit({epoch, "val", val.loss, val.metrics.accuracy, val.metrics.precision_macro()});

    if (!have_best || better(val, result.best_val)) {
      have_best = true;
      result.best_epoch = epoch;
      TrainingState state;
      state.train = cfg;
      state.epoch = epoch;
      state.rng_state = rng_text(rng);
      state.velocity = optimizer.velocity();
      result.best_checkpoint = encode_checkpoint(model, state);
      result.best_val = std::move(val);
    }
  }
  return result;
}

std::string format_metric(std::optional<double> value) {
  if (!value) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *value);
  return buf;
}

std::string metrics_csv(std::span<const EpochRecord> log) {
  std::string out = "epoch,split,loss,accuracy,precision_macro\n";
  for (const auto& r : log) {
    out += std::to_string(r.epoch) + "," + r.split + "," + format_metric(r.loss) + "," + format_metric(r.accuracy) +
           "," + format_metric(r.precision_macro) + "\n";
  }
  return out;
}

std::string confusion_csv(const ClassificationMetrics& metrics) {
  std::string out = "truth\\pred";
  for (std::size_t c = 0; c < metrics.confusion.size(); ++c) out += "," + std::to_string(c);
  out += "\n";
  for (std::size_t t = 0; t < metrics.confusion.size(); ++t) {
    out += std::to_string(t);
    for (std::size_t v : metrics.confusion[t]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

}  // namespace grasens
