#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "postscan/common.hpp"

namespace postscan::metrics {

/// Positive = Concerning.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const Label> gold, std::span<const Label> predicted);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
  /// Score threshold for each point (inclusive: score >= threshold counts as positive).
  /// The first point uses +infinity.
  std::vector<double> thresholds;
  double auc = 0.0;
};

struct EvalReport {
  /// Indexed by label_index(): [0] Benign, [1] Concerning.
  std::array<ClassMetrics, 2> per_class;
  double accuracy = 0.0;
  Averages macro;
  Averages weighted;
  ConfusionMatrix matrix;
  /// Set when some metric had a zero denominator and was reported as 0.
  bool zero_division = false;
  std::vector<std::string> warnings;
  std::optional<RocCurve> roc;
};

/// Throws std::invalid_argument on length mismatch or empty input.
EvalReport evaluate(std::span<const Label> gold, std::span<const Label> predicted);
EvalReport evaluate(const ConfusionMatrix& matrix);

/// Thresholds sweep the distinct scores in descending order; equal scores form one step.
/// Throws std::invalid_argument when gold holds a single class, lengths differ, or a score is
/// outside [0, 1].
RocCurve roc(std::span<const Label> gold, std::span<const double> scores);

/// Half away from zero, two decimals, as printed in result tables ("0.81").
std::string format_2dp(double value);

std::string to_json(const EvalReport& report);
/// Plain-text table: per-class rows, accuracy, macro avg, weighted avg.
std::string format_table(const EvalReport& report, const std::string& title = "Results");
/// "fpr,tpr" header then one line per point.
std::string roc_csv(const RocCurve& curve);

}  // namespace postscan::metrics
