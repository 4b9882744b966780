#include "trires/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "trires/sampler.hpp"
#include "trires/tiles.hpp"
#include "trires/training.hpp"

namespace trires {

std::vector<double> MaskOraclePredictor::malignancy(const Tensor&,
                                                    std::span<const TileRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto it = slides_.find(r.slide_id);
    if (it == slides_.end()) throw FormatError("unknown slide '" + r.slide_id + "'");
    out.push_back(malignant_at(it->second, r.center_x(), r.center_y()) ? 1.0 : 0.0);
  }
  return out;
}

EvaluationResult evaluate(TilePredictor& predictor, const DatasetManifest& manifest, Split split,
                          const SlideSet& slides, const EvaluationOptions& options) {
  const auto records = manifest.records_in(split);
  if (records.empty()) {
    throw EmptyEvaluation("split '" + std::string(split_name(split)) + "' holds no records");
  }
  EvaluationResult result;
  for (const auto& [a, b] : batch_ranges(records.size(), options.batch_size)) {
    const std::span<const TileRecord> batch(records.data() + a, b - a);
    Tensor tiles;
    if (predictor.needs_pixels()) tiles = load_batch(slides, batch, options.dtype, options.input_side);
    const auto p = predictor.malignancy(tiles, batch);
    if (p.size() != batch.size()) throw StateError("predictor returned a wrong number of values");
    result.probabilities.insert(result.probabilities.end(), p.begin(), p.end());
  }
  for (const auto& r : records) result.labels.push_back(r.label);
  result.counts = confusion_at(result.probabilities, result.labels, options.threshold);
  result.metrics = compute_metrics(result.counts);
  return result;
}

std::vector<std::size_t> allocate_counts(std::size_t n, std::span<const double> fractions) {
  std::vector<std::size_t> counts(fractions.size());
  std::vector<double> remainder(fractions.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    // The epsilon absorbs products like 0.7 * 20 = 14.000000000000002.
    const double exact = fractions[i] * static_cast<double>(n);
    const double whole = std::floor(exact + 1e-9);
    counts[i] = static_cast<std::size_t>(whole);
    remainder[i] = std::max(0.0, exact - whole);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % order.size(), ++assigned) ++counts[order[k]];
  return counts;
}

namespace {

void check_fractions(std::span<const double> fractions) {
  if (fractions.empty() || fractions.size() > 3) throw SplitError("between 1 and 3 split fractions expected");
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0) || f > 1.0) throw SplitError("split fractions must lie in [0, 1]");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw SplitError("split fractions must sum to 1");
}

constexpr Split kSplits[] = {Split::train, Split::val, Split::test};

}  // namespace

std::map<std::string, Split> assign_slides_to_splits(std::vector<std::string> ids,
                                                     std::span<const double> fractions,
                                                     std::uint64_t seed) {
  check_fractions(fractions);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const auto nonzero = static_cast<std::size_t>(
      std::count_if(fractions.begin(), fractions.end(), [](double f) { return f > 0.0; }));
  if (ids.size() < nonzero) {
    throw SplitError(std::to_string(ids.size()) + " slides cannot fill " + std::to_string(nonzero) +
                     " nonzero splits");
  }
  auto counts = allocate_counts(ids.size(), fractions);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (fractions[i] > 0.0 && counts[i] == 0) {
      const auto donor =
          static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      --counts[donor];
      ++counts[i];
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::map<std::string, Split> assignment;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t k = 0; k < counts[i]; ++k) assignment[ids[pos++]] = kSplits[i];
  }
  return assignment;
}

DatasetManifest split_manifest(const DatasetManifest& manifest, std::span<const double> fractions,
                               bool by_slide, std::uint64_t seed) {
  check_fractions(fractions);
  DatasetManifest out = manifest;

  if (by_slide) {
    std::vector<std::string> ids;
    for (const auto& r : manifest.records) ids.push_back(r.slide_id);
    const auto assignment = assign_slides_to_splits(std::move(ids), fractions, seed);
    for (auto& r : out.records) r.split = assignment.at(r.slide_id);
    return out;
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> by_label[2];
  for (std::size_t i = 0; i < out.records.size(); ++i) by_label[out.records[i].label == 1 ? 1 : 0].push_back(i);
  for (auto& v : by_label) std::shuffle(v.begin(), v.end(), rng);
  std::vector<std::size_t> interleaved;
  interleaved.reserve(out.records.size());
  for (std::size_t k = 0; k < std::max(by_label[0].size(), by_label[1].size()); ++k) {
    if (k < by_label[1].size()) interleaved.push_back(by_label[1][k]);
    if (k < by_label[0].size()) interleaved.push_back(by_label[0][k]);
  }
  const auto counts = allocate_counts(interleaved.size(), fractions);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t k = 0; k < counts[i]; ++k) out.records[interleaved[pos++]].split = kSplits[i];
  }
  return out;
}

}  // namespace trires
