#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trires/adam.hpp"
#include "trires/augment.hpp"
#include "trires/baseline.hpp"
#include "trires/manifest.hpp"
#include "trires/slide.hpp"
#include "trires/triresnet.hpp"

namespace trires {

struct TrainConfig {
  static constexpr int finetune_lr_divisor = 10;

  double base_lr = 1e-4;
  int batch_size = 32;
  int epochs_stage1 = 5;
  int epochs_stage2 = 5;
  int epochs_stage3 = 5;
  int epochs_baseline = 15;
  AdamConfig adam;
  std::uint64_t seed = 0;
  AugmentConfig augment;
  // Stage-1 stream i sees only the i-th third of a seeded partition.
  bool disjoint_stream_subsets = false;
  // Per-epoch validation accuracy when the data holds a validation split.
  bool validate_each_epoch = true;

  double finetune_lr() const { return base_lr / finetune_lr_divisor; }
};

void validate(const TrainConfig& config);

// Tiles of one split held in memory: images [N, 3, s, s] and labels.
struct TileDataset {
  Tensor images;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

TileDataset load_split(const SlideSet& slides, const DatasetManifest& manifest, Split split,
                       Dtype dtype = Dtype::f32, int input_side = 0);

struct TrainingData {
  TileDataset train;
  TileDataset val;  // may be empty
};

TrainingData load_training_data(const SlideSet& slides, const DatasetManifest& manifest,
                                Dtype dtype = Dtype::f32, int input_side = 0);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;       // sample-weighted mean over the epoch
  double train_acc = 0.0;  // train-mode predictions made during the epoch
  std::optional<double> val_acc;
};

struct StageReport {
  // pretrain_stream_0..2, head, finetune or baseline.
  std::string stage;
  double lr = 0.0;
  std::vector<EpochRecord> epochs;
  double wall_seconds = 0.0;
  std::size_t updated_tensors = 0;
  std::size_t frozen_tensors = 0;
  std::size_t updated_elements = 0;
};

struct PolicyHooks {
  std::function<void(const std::string& stage, double lr)> on_step;
  std::function<void(const std::string& stage, const EpochRecord&)> on_epoch;
  std::function<void(const StageReport&, const TriResNetModel&)> after_stage;
};

// Stage 1. For each stream i in order: freeze the other streams and the
// head, attach proxy head i (seeded cfg.seed + i), train stream i and the
// proxy on a shuffle seeded cfg.seed + i, detach, restore the freeze state.
// StateError when a proxy head is already attached.
std::vector<StageReport> pretrain_streams(TriResNetModel& model, const TrainingData& data,
                                          const TrainConfig& cfg, const PolicyHooks& hooks = {});
// Stage 2. Streams frozen, head trained at base_lr (shuffle seed cfg.seed + 3).
StageReport train_head(TriResNetModel& model, const TrainingData& data, const TrainConfig& cfg,
                       const PolicyHooks& hooks = {});
// Stage 3. Everything unfrozen, lr = base_lr / 10 (shuffle seed cfg.seed + 4).
StageReport fine_tune(TriResNetModel& model, const TrainingData& data, const TrainConfig& cfg,
                      const PolicyHooks& hooks = {});
// The three stages in order; five reports.
std::vector<StageReport> run_policy(TriResNetModel& model, const TrainingData& data,
                                    const TrainConfig& cfg, const PolicyHooks& hooks = {});

// Conventional end-to-end training at base_lr for epochs_baseline epochs.
StageReport train_single_stream(SingleStreamModel& model, const TrainingData& data,
                                const TrainConfig& cfg, const PolicyHooks& hooks = {});

// Fraction of tiles whose eval-mode argmax equals the label.
double accuracy(TriResNetModel& model, const TileDataset& data, int batch_size = 64);
double accuracy(SingleStreamModel& model, const TileDataset& data, int batch_size = 64);

// One JSON object per epoch: {"stage", "epoch", "loss", "train_acc", "val_acc", "lr"}.
void write_report_lines(std::ostream& out, const StageReport& report);

// Batch boundaries over n samples; a trailing batch of one sample joins the
// previous batch because batch norm needs two values per channel.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, int batch_size);

Tensor gather_rows(const Tensor& images, std::span<const std::size_t> indices);

}  // namespace trires
