#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gntm/model.hpp"
#include "gntm/training.hpp"

namespace gntm {

/// Rows are true classes, columns predicted classes, in canonical order.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, 3>, 3> counts{};

  std::size_t total() const;
  std::size_t row_sum(std::size_t c) const;
  std::size_t column_sum(std::size_t c) const;
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws std::invalid_argument on length mismatch, empty input or class ids
/// outside 0..2.
ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truths);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool operator==(const ClassMetrics&) const = default;
};

/// Zero denominators give 0 for the affected metric.
struct Metrics {
  std::array<ClassMetrics, 3> per_class;
  ClassMetrics macro;
  double accuracy = 0.0;
  bool operator==(const Metrics&) const = default;
};

Metrics metrics(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
  /// Absent when the class has no positives or no negatives.
  std::optional<double> auc;
  bool operator==(const RocCurve&) const = default;
};

/// Binary ROC over unique score thresholds, highest first, from (0,0) to
/// (1,1). Tied scores move along a diagonal segment. AUC by trapezoid.
RocCurve roc_binary(const std::vector<double>& scores, const std::vector<bool>& positive);

/// One-vs-rest curve per class, scoring class c by its probability.
std::array<RocCurve, 3> roc_auc(const std::vector<Tensor>& probs, const std::vector<int>& truths);

struct OperatingPoint {
  double tpr = 0.0;
  double fpr = 0.0;
  bool operator==(const OperatingPoint&) const = default;
};

struct EvalReport {
  ConfusionMatrix confusion;
  Metrics metrics;
  std::array<RocCurve, 3> roc;
  /// TPR/FPR per class at the argmax decision.
  std::array<OperatingPoint, 3> operating;
  std::size_t windows = 0;
  bool operator==(const EvalReport&) const = default;
};

EvalReport build_report(const std::vector<Tensor>& probs, const std::vector<int>& truths);

/// Runs the model over labeled windows and builds the report.
EvalReport evaluate(const ModelParams& p, const ModelConfig& cfg, const std::vector<LabeledWindow>& data);

std::string report_to_json(const EvalReport& report);
/// Inverse of report_to_json; throws std::runtime_error on malformed input.
EvalReport parse_report_json(const std::string& text);

/// Writes report.json, confusion.csv, roc_<class>.csv and, when `logs` is
/// non-empty, curves.csv. Creates `dir` if needed.
void emit_report(const EvalReport& report, const std::string& dir, const std::vector<EpochLog>& logs = {});

/// "accuracy=… macro_f1=… auc[Normal]=… auc[DoS]=… auc[DDoS]=…"; an undefined AUC prints as -1.
std::string summary_line(const EvalReport& report);

}  // namespace gntm
