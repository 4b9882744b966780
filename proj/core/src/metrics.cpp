#include "trires/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "trires/errors.hpp"

namespace trires {

void ConfusionMatrix::add(int label, int predicted) {
  if (label == 1) {
    (predicted == 1 ? tp : fn) += 1;
  } else {
    (predicted == 1 ? fp : tn) += 1;
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw EmptyEvaluation("no evaluated tiles");
  MetricsReport r;
  r.counts = cm;
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fn > 0) r.sensitivity = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  if (cm.tn + cm.fp > 0) r.specificity = static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
  return r;
}

ConfusionMatrix confusion_at(std::span<const double> probabilities, std::span<const int> labels,
                             double threshold) {
  if (probabilities.size() != labels.size()) {
    throw ShapeError("confusion_at: " + std::to_string(probabilities.size()) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    cm.add(labels[i], probabilities[i] >= threshold ? 1 : 0);
  }
  return cm;
}

std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t name_width = 7;
  for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return std::string(buf);
  };
  auto line = [&](const std::string& a, const std::string& b, const std::string& c,
                  const std::string& d) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s | %11s | %11s | %11s\n", static_cast<int>(name_width),
                  a.c_str(), b.c_str(), c.c_str(), d.c_str());
    return std::string(buf);
  };
  std::string out = line("Network", "Accuracy", "Sensitivity", "Specificity");
  out += std::string(name_width, '-') + "-+-" + std::string(11, '-') + "-+-" + std::string(11, '-') +
         "-+-" + std::string(11, '-') + "\n";
  for (const auto& [name, r] : rows) {
    out += line(name, cell(r.accuracy), cell(r.sensitivity), cell(r.specificity));
  }
  return out;
}

}  // namespace trires
