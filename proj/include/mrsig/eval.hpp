#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrsig/matrix.hpp"

namespace mrsig {

/// c x c counts, rows = true class, columns = predicted class.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 std::size_t n_classes);

/// trace / total.
double accuracy(const ConfusionMatrix& confusion);
double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// Per-class f1 = 2PR/(P+R), 0 where undefined.
std::vector<double> f1_per_class(const ConfusionMatrix& confusion);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
  double auc = 0.0;
};

/// ROC for binary labels: thresholds at the distinct observed scores, descending,
/// tied scores entering together. AUC by the trapezoid rule.
RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positive);

/// One-vs-rest ROC for class k using column k of `probs` (m x c).
RocCurve roc_ovr(const Matrix& probs, std::span<const int> y_true, std::size_t k);

double mean_absolute_error(std::span<const double> y_true, std::span<const double> y_pred);

struct BootstrapSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over resamples
  std::size_t resamples = 0;
};

/// Metric over a resample, given the (repeating) instance indices it drew.
using ResampleMetric = std::function<double(std::span<const std::size_t>)>;

/// Draws `n_resamples` with-replacement resamples of `n_instances` indices and
/// summarizes the metric. Deterministic in `seed`.
BootstrapSummary bootstrap(std::size_t n_instances, std::size_t n_resamples, std::uint64_t seed,
                           const ResampleMetric& metric);

BootstrapSummary bootstrap_accuracy(std::span<const int> y_true, std::span<const int> y_pred,
                                    std::size_t n_resamples, std::uint64_t seed);
BootstrapSummary bootstrap_mae(std::span<const double> y_true, std::span<const double> y_pred,
                               std::size_t n_resamples, std::uint64_t seed);

/// Classification part of a report.
struct ClassificationMetrics {
  double accuracy = 0.0;  // on the full evaluation set
  BootstrapSummary accuracy_bootstrap;
  ConfusionMatrix confusion;
  std::vector<double> f1;
  std::vector<std::optional<RocCurve>> roc;  // nullopt: class absent or universal in the test set
};

struct RegressionMetrics {
  double mae = 0.0;
  BootstrapSummary mae_bootstrap;
};

struct EvalReport {
  std::string model;  // "mrsf" or "naive"
  std::size_t n_instances = 0;
  std::vector<std::string> class_names;
  std::optional<ClassificationMetrics> classification;
  std::optional<RegressionMetrics> regression;
};

/// Full classification report over a test set.
EvalReport evaluate_classifier(std::string model, std::span<const int> y_true, const Matrix& probs,
                               std::vector<std::string> class_names, std::size_t n_resamples,
                               std::uint64_t seed);

EvalReport evaluate_regressor(std::string model, std::span<const double> y_true,
                              std::span<const double> y_pred, std::size_t n_resamples,
                              std::uint64_t seed);

}  // namespace mrsig
