#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace trires {

// Positive class = malignant = 1.
struct ConfusionMatrix {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  void add(int label, int predicted);
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Sensitivity / specificity are empty when their denominator is zero.
struct MetricsReport {
  ConfusionMatrix counts;
  double accuracy = 0.0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

// accuracy = (TP+TN)/total, sensitivity = TP/(TP+FN), specificity = TN/(TN+FP).
// EmptyEvaluation when total = 0.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

constexpr double kDefaultDecisionThreshold = 0.5;

// Predicted malignant iff probability >= threshold.
ConfusionMatrix confusion_at(std::span<const double> probabilities, std::span<const int> labels,
                             double threshold = kDefaultDecisionThreshold);

// Plain-text table with one row per model and columns
// Network | Accuracy | Sensitivity | Specificity. Undefined entries print "n/a".
std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace trires
