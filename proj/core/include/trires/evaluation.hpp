#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <span>
#include <vector>

#include "trires/baseline.hpp"
#include "trires/manifest.hpp"
#include "trires/metrics.hpp"
#include "trires/slide.hpp"
#include "trires/triresnet.hpp"

namespace trires {

// Maps a batch of tiles to malignancy probabilities. `records` describes
// where each tile came from; model-backed predictors ignore it.
class TilePredictor {
 public:
  virtual ~TilePredictor() = default;
  virtual std::vector<double> malignancy(const Tensor& tiles, std::span<const TileRecord> records) = 0;
  // Predictors that never look at pixels skip tile extraction.
  virtual bool needs_pixels() const { return true; }
};

class TriResNetPredictor : public TilePredictor {
 public:
  explicit TriResNetPredictor(TriResNetModel& model) : model_(model) {}
  std::vector<double> malignancy(const Tensor& tiles, std::span<const TileRecord>) override {
    return model_.predict_malignancy(tiles);
  }

 private:
  TriResNetModel& model_;
};

class SingleStreamPredictor : public TilePredictor {
 public:
  explicit SingleStreamPredictor(SingleStreamModel& model) : model_(model) {}
  std::vector<double> malignancy(const Tensor& tiles, std::span<const TileRecord>) override {
    return model_.predict_malignancy(tiles);
  }

 private:
  SingleStreamModel& model_;
};

class ConstantPredictor : public TilePredictor {
 public:
  explicit ConstantPredictor(double p) : p_(p) {}
  std::vector<double> malignancy(const Tensor&, std::span<const TileRecord> records) override {
    return std::vector<double>(records.size(), p_);
  }
  bool needs_pixels() const override { return false; }

 private:
  double p_;
};

// 1 when the tile centre lies in its slide's malignancy mask, else 0.
class MaskOraclePredictor : public TilePredictor {
 public:
  explicit MaskOraclePredictor(const SlideSet& slides) : slides_(slides) {}
  std::vector<double> malignancy(const Tensor&, std::span<const TileRecord> records) override;
  bool needs_pixels() const override { return false; }

 private:
  const SlideSet& slides_;
};

struct EvaluationOptions {
  double threshold = kDefaultDecisionThreshold;
  int batch_size = 32;
  int input_side = 0;  // resize tiles to this side when > 0
  Dtype dtype = Dtype::f32;
};

struct EvaluationResult {
  ConfusionMatrix counts;
  MetricsReport metrics;
  std::vector<double> probabilities;  // manifest order within the split
  std::vector<int> labels;
};

// Predicts every record of `split` in batches and reduces in record order.
// EmptyEvaluation when the split holds no records.
EvaluationResult evaluate(TilePredictor& predictor, const DatasetManifest& manifest, Split split,
                          const SlideSet& slides, const EvaluationOptions& options = {});

// Assigns split tags. Counts per split follow the fractions by largest
// remainder. Tile-level splits keep classes balanced by interleaving the
// shuffled classes before cutting; by-slide splits move whole slides and give
// every nonzero fraction at least one slide. fractions: 1 to 3 values
// (train, val, test) summing to 1.
//   bad fractions -> SplitError
//   by_slide with fewer slides than nonzero fractions -> SplitError
DatasetManifest split_manifest(const DatasetManifest& manifest, std::span<const double> fractions,
                               bool by_slide, std::uint64_t seed);

// Whole-slide assignment used by by-slide splits: ids are sorted, shuffled
// with `seed` and cut by allocate_counts, moving one slide to any nonzero
// fraction left empty. SplitError when ids cannot cover every nonzero split.
std::map<std::string, Split> assign_slides_to_splits(std::vector<std::string> ids,
                                                     std::span<const double> fractions,
                                                     std::uint64_t seed);

// Largest-remainder allocation of n items to the fractions; ties favour the
// earlier fraction.
std::vector<std::size_t> allocate_counts(std::size_t n, std::span<const double> fractions);

}  // namespace trires
