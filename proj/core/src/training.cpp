#include "trires/training.hpp"

#include <algorithm>
#include <chrono>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>
#include <random>

#include "trires/tape.hpp"
#include "trires/tiles.hpp"

namespace trires {

void validate(const TrainConfig& c) {
  if (!(c.base_lr > 0.0)) throw ConfigError("base_lr must be positive");
  if (c.batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (c.epochs_stage1 < 0 || c.epochs_stage2 < 0 || c.epochs_stage3 < 0 || c.epochs_baseline < 0) {
    throw ConfigError("epoch counts must be non-negative");
  }
  if (c.augment.brightness < 0.0 || c.augment.brightness > 1.0) {
    throw ConfigError("brightness range must lie in [0, 1]");
  }
  if (c.augment.flip_probability < 0.0 || c.augment.flip_probability > 1.0) {
    throw ConfigError("flip probability must lie in [0, 1]");
  }
}

TileDataset load_split(const SlideSet& slides, const DatasetManifest& manifest, Split split,
                       Dtype dtype, int input_side) {
  const auto records = manifest.records_in(split);
  TileDataset out;
  if (records.empty()) return out;
  out.images = load_batch(slides, records, dtype, input_side);
  for (const auto& r : records) out.labels.push_back(r.label);
  return out;
}

TrainingData load_training_data(const SlideSet& slides, const DatasetManifest& manifest,
                                Dtype dtype, int input_side) {
  return {load_split(slides, manifest, Split::train, dtype, input_side),
          load_split(slides, manifest, Split::val, dtype, input_side)};
}

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, int batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto b = static_cast<std::size_t>(std::max(batch_size, 1));
  for (std::size_t start = 0; start < n; start += b) out.emplace_back(start, std::min(n, start + b));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out.pop_back();
    out.back().second = n;
  }
  return out;
}

Tensor gather_rows(const Tensor& images, std::span<const std::size_t> indices) {
  Shape shape = images.shape();
  const std::size_t per = images.numel() / static_cast<std::size_t>(shape[0]);
  shape[0] = static_cast<std::int64_t>(indices.size());
  Tensor out = Tensor::zeros(shape, images.dtype());
  dispatch(images.dtype(), [&]<typename T>() {
    auto src = images.data<T>();
    auto dst = out.mutable_data<T>();
    for (std::size_t i = 0; i < indices.size(); ++i) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(indices[i] * per), per,
                  dst.begin() + static_cast<std::ptrdiff_t>(i * per));
    }
  });
  return out;
}

namespace {

std::vector<int> argmax_rows(const Tensor& logits) {
  const auto N = logits.dim(0), K = logits.dim(1);
  const auto v = logits.values();
  std::vector<int> out(static_cast<std::size_t>(N));
  for (std::int64_t n = 0; n < N; ++n) {
    const auto row = v.begin() + n * K;
    out[n] = static_cast<int>(std::max_element(row, row + K) - row);
  }
  return out;
}

template <typename Forward>
double accuracy_of(Forward&& forward, const TileDataset& data, int batch_size) {
  if (data.size() == 0) throw EmptyEvaluation("accuracy of an empty dataset");
  NoGradGuard guard;
  std::size_t correct = 0;
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (const auto& [a, b] : batch_ranges(data.size(), batch_size)) {
    const std::span<const std::size_t> rows(idx.data() + a, b - a);
    const auto pred = argmax_rows(forward(gather_rows(data.images, rows), Mode::eval));
    for (std::size_t i = a; i < b; ++i) correct += pred[i - a] == data.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

struct StageSpec {
  std::string id;
  double lr = 0.0;
  int epochs = 0;
  std::uint64_t shuffle_seed = 0;
  std::vector<std::size_t> indices;
  std::function<Tensor(const Tensor&, Mode)> forward;
  std::vector<NamedTensor> all_parameters;
  std::function<double()> validate;
};

StageReport run_stage(const StageSpec& spec, const TrainingData& data, const TrainConfig& cfg,
                      const PolicyHooks& hooks) {
  const auto started = std::chrono::steady_clock::now();
  StageReport report;
  report.stage = spec.id;
  report.lr = spec.lr;
  std::vector<Tensor> trainable;
  for (const auto& p : spec.all_parameters) {
    if (p.tensor.requires_grad()) {
      trainable.push_back(p.tensor);
      ++report.updated_tensors;
      report.updated_elements += p.tensor.numel();
    } else {
      ++report.frozen_tensors;
    }
  }
  if (spec.epochs == 0 || spec.indices.empty()) {
    report.wall_seconds = 0.0;
    return report;
  }
  AdamState adam;
  adam.config = cfg.adam;
  std::mt19937_64 shuffle_rng(spec.shuffle_seed);
  std::mt19937_64 augment_rng(spec.shuffle_seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order = spec.indices;
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    for (const auto& [a, b] : batch_ranges(order.size(), cfg.batch_size)) {
      const std::span<const std::size_t> rows(order.data() + a, b - a);
      Tensor x = gather_rows(data.train.images, rows);
      if (cfg.augment.any()) x = augment_tile(x, cfg.augment, augment_rng);
      std::vector<int> labels;
      labels.reserve(rows.size());
      for (std::size_t r : rows) labels.push_back(data.train.labels[r]);
      const Tensor logits = spec.forward(x, Mode::train);
      const Tensor loss = softmax_cross_entropy(logits, labels);
      backward(loss);
      adam_step(trainable, adam, spec.lr);
      if (hooks.on_step) hooks.on_step(spec.id, spec.lr);
      loss_sum += loss.item() * static_cast<double>(rows.size());
      const auto pred = argmax_rows(logits);
      for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
      seen += rows.size();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(seen);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
    if (cfg.validate_each_epoch && data.val.size() > 0 && spec.validate) rec.val_acc = spec.validate();
    if (hooks.on_epoch) hooks.on_epoch(spec.id, rec);
    report.epochs.push_back(rec);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::vector<std::size_t> all_indices(const TileDataset& d) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// Stream-specific subsets for stage 1: the full set, or the i-th third of a
// seeded permutation.
std::vector<std::size_t> stream_subset(const TileDataset& d, const TrainConfig& cfg, int stream) {
  auto idx = all_indices(d);
  if (!cfg.disjoint_stream_subsets) return idx;
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::size_t> out;
  for (std::size_t p = static_cast<std::size_t>(stream); p < idx.size(); p += kStreamCount) {
    out.push_back(idx[p]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::function<double()> validator(TriResNetModel& model, const TrainingData& data) {
  return [&model, &data] {
    return accuracy_of([&](const Tensor& x, Mode m) { return model.forward(x, m); }, data.val, 64);
  };
}

void finish(const StageReport& report, const TriResNetModel& model, const PolicyHooks& hooks) {
  if (hooks.after_stage) hooks.after_stage(report, model);
}

}  // namespace

double accuracy(TriResNetModel& model, const TileDataset& data, int batch_size) {
  return accuracy_of([&](const Tensor& x, Mode m) { return model.forward(x, m); }, data, batch_size);
}

double accuracy(SingleStreamModel& model, const TileDataset& data, int batch_size) {
  return accuracy_of([&](const Tensor& x, Mode m) { return model.forward(x, m); }, data, batch_size);
}

std::vector<StageReport> pretrain_streams(TriResNetModel& model, const TrainingData& data,
                                          const TrainConfig& cfg, const PolicyHooks& hooks) {
  validate(cfg);
  for (int i = 0; i < kStreamCount; ++i) {
    if (model.has_proxy_head(i)) {
      throw StateError("stage 1 requires no proxy heads; stream " + std::to_string(i) + " has one");
    }
  }
  std::vector<StageReport> reports;
  const FreezeState saved = model.freeze_state();
  for (int i = 0; i < kStreamCount; ++i) {
    FreezeState only{{true, true, true}, true};
    only.streams[i] = false;
    model.set_freeze_state(only);
    model.attach_proxy_head(i, cfg.seed + static_cast<std::uint64_t>(i));
    StageSpec spec;
    spec.id = "pretrain_stream_" + std::to_string(i);
    spec.lr = cfg.base_lr;
    spec.epochs = cfg.epochs_stage1;
    spec.shuffle_seed = cfg.seed + static_cast<std::uint64_t>(i);
    spec.indices = stream_subset(data.train, cfg, i);
    spec.forward = [&model, i](const Tensor& x, Mode m) { return model.forward_proxy(i, x, m); };
    spec.all_parameters = model.parameters();
    spec.validate = [&model, &data, i] {
      return accuracy_of([&](const Tensor& x, Mode m) { return model.forward_proxy(i, x, m); },
                         data.val, 64);
    };
    StageReport report;
    try {
      report = run_stage(spec, data, cfg, hooks);
    } catch (...) {
      model.detach_proxy_head(i);
      model.set_freeze_state(saved);
      throw;
    }
    model.detach_proxy_head(i);
    model.set_freeze_state(saved);
    finish(report, model, hooks);
    reports.push_back(std::move(report));
  }
  return reports;
}

StageReport train_head(TriResNetModel& model, const TrainingData& data, const TrainConfig& cfg,
                       const PolicyHooks& hooks) {
  validate(cfg);
  const FreezeState saved = model.freeze_state();
  model.set_freeze_state({{true, true, true}, false});
  StageSpec spec;
  spec.id = "head";
  spec.lr = cfg.base_lr;
  spec.epochs = cfg.epochs_stage2;
  spec.shuffle_seed = cfg.seed + 3;
  spec.indices = all_indices(data.train);
  spec.forward = [&model](const Tensor& x, Mode m) { return model.forward(x, m); };
  spec.all_parameters = model.parameters();
  spec.validate = validator(model, data);
  StageReport report;
  try {
    report = run_stage(spec, data, cfg, hooks);
  } catch (...) {
    model.set_freeze_state(saved);
    throw;
  }
  model.set_freeze_state(saved);
  finish(report, model, hooks);
  return report;
}

StageReport fine_tune(TriResNetModel& model, const TrainingData& data, const TrainConfig& cfg,
                      const PolicyHooks& hooks) {
  validate(cfg);
  model.set_freeze_state({});
  StageSpec spec;
  spec.id = "finetune";
  spec.lr = cfg.finetune_lr();
  spec.epochs = cfg.epochs_stage3;
  spec.shuffle_seed = cfg.seed + 4;
  spec.indices = all_indices(data.train);
  spec.forward = [&model](const Tensor& x, Mode m) { return model.forward(x, m); };
  spec.all_parameters = model.parameters();
  spec.validate = validator(model, data);
  StageReport report = run_stage(spec, data, cfg, hooks);
  finish(report, model, hooks);
  return report;
}

std::vector<StageReport> run_policy(TriResNetModel& model, const TrainingData& data,
                                    const TrainConfig& cfg, const PolicyHooks& hooks) {
  auto reports = pretrain_streams(model, data, cfg, hooks);
  reports.push_back(train_head(model, data, cfg, hooks));
  reports.push_back(fine_tune(model, data, cfg, hooks));
  return reports;
}

StageReport train_single_stream(SingleStreamModel& model, const TrainingData& data,
                                const TrainConfig& cfg, const PolicyHooks& hooks) {
  validate(cfg);
  StageSpec spec;
  spec.id = "baseline";
  spec.lr = cfg.base_lr;
  spec.epochs = cfg.epochs_baseline;
  spec.shuffle_seed = cfg.seed;
  spec.indices = all_indices(data.train);
  spec.forward = [&model](const Tensor& x, Mode m) { return model.forward(x, m); };
  spec.all_parameters = model.parameters();
  spec.validate = [&model, &data] { return accuracy(model, data.val); };
  return run_stage(spec, data, cfg, hooks);
}

void write_report_lines(std::ostream& out, const StageReport& report) {
  for (const auto& e : report.epochs) {
    nlohmann::json j;
    j["stage"] = report.stage;
    j["epoch"] = e.epoch;
    j["loss"] = e.loss;
    j["train_acc"] = e.train_acc;
    j["val_acc"] = e.val_acc ? nlohmann::json(*e.val_acc) : nlohmann::json(nullptr);
    j["lr"] = report.lr;
    out << j.dump() << '\n';
  }
}

}  // namespace trires
