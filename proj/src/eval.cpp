#include "mrsig/eval.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "mrsig/errors.hpp"
#include "mrsig/forest.hpp"
#include "mrsig/random.hpp"

namespace mrsig {

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 std::size_t n_classes) {
  if (y_true.size() != y_pred.size())
    throw InvalidArgument("confusion_matrix: length mismatch");
  ConfusionMatrix cm(n_classes, std::vector<std::size_t>(n_classes, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes ||
        static_cast<std::size_t>(p) >= n_classes)
      throw InvalidArgument("confusion_matrix: label out of range at index " + std::to_string(i));
    ++cm[t][p];
  }
  return cm;
}

double accuracy(const ConfusionMatrix& confusion) {
  std::size_t hit = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i) {
    hit += confusion[i][i];
    total += std::accumulate(confusion[i].begin(), confusion[i].end(), std::size_t{0});
  }
  if (total == 0) throw UndefinedMetric("accuracy of an empty confusion matrix");
  return static_cast<double>(hit) / static_cast<double>(total);
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw InvalidArgument("accuracy: length mismatch");
  if (y_true.empty()) throw UndefinedMetric("accuracy of an empty sample");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hit += y_true[i] == y_pred[i];
  return static_cast<double>(hit) / static_cast<double>(y_true.size());
}

std::vector<double> f1_per_class(const ConfusionMatrix& confusion) {
  const std::size_t c = confusion.size();
  std::vector<double> f1(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    double tp = static_cast<double>(confusion[k][k]);
    double row = 0.0;
    double col = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      row += static_cast<double>(confusion[k][j]);
      col += static_cast<double>(confusion[j][k]);
    }
    // 2PR/(P+R) = 2tp/(row+col); zero when the class never occurs nor is predicted.
    f1[k] = row + col > 0.0 ? 2.0 * tp / (row + col) : 0.0;
  }
  return f1;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw InvalidArgument("roc_curve: length mismatch");
  const std::size_t n = scores.size();
  const auto pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const auto neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw UndefinedMetric("roc_curve: need both positives and negatives");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({0.0, 0.0});
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < n;) {
    const double s = scores[order[i]];
    for (; i < n && scores[order[i]] == s; ++i) (positive[order[i]] ? tp : fp) += 1.0;
    roc.points.push_back({fp / neg, tp / pos});
  }
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    const auto& a = roc.points[i - 1];
    const auto& b = roc.points[i];
    roc.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return roc;
}

RocCurve roc_ovr(const Matrix& probs, std::span<const int> y_true, std::size_t k) {
  if (probs.rows() != y_true.size()) throw InvalidArgument("roc_ovr: length mismatch");
  if (k >= probs.cols()) throw InvalidArgument("roc_ovr: class index out of range");
  std::vector<double> scores(probs.rows());
  auto pos = std::make_unique<bool[]>(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    scores[i] = probs(i, k);
    pos[i] = y_true[i] == static_cast<int>(k);
  }
  return roc_curve(scores, std::span<const bool>(pos.get(), probs.rows()));
}

double mean_absolute_error(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw InvalidArgument("mae: length mismatch");
  if (y_true.empty()) throw InvalidArgument("mae: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) sum += std::abs(y_true[i] - y_pred[i]);
  return sum / static_cast<double>(y_true.size());
}

BootstrapSummary bootstrap(std::size_t n_instances, std::size_t n_resamples, std::uint64_t seed,
                           const ResampleMetric& metric) {
  if (n_resamples == 0) throw InvalidArgument("bootstrap: need at least one resample");
  if (n_instances == 0) throw InvalidArgument("bootstrap: no instances");
  std::vector<double> values(n_resamples);
  parallel_for(n_resamples, [&](std::size_t r) {
    Rng rng(derive_seed(seed, r));
    std::vector<std::size_t> idx(n_instances);
    for (auto& i : idx) i = uniform_index(rng, n_instances);
    values[r] = metric(idx);
  });
  BootstrapSummary out;
  out.resamples = n_resamples;
  // Sums are taken relative to the first value so a constant metric comes back exact.
  const double n = static_cast<double>(n_resamples);
  const double shift = values.front();
  double sum = 0.0;
  for (double v : values) sum += v - shift;
  const double offset = sum / n;
  out.mean = shift + offset;
  double ss = 0.0;
  for (double v : values) ss += (v - shift - offset) * (v - shift - offset);
  out.std = std::sqrt(ss / n);
  return out;
}

BootstrapSummary bootstrap_accuracy(std::span<const int> y_true, std::span<const int> y_pred,
                                    std::size_t n_resamples, std::uint64_t seed) {
  if (y_true.size() != y_pred.size()) throw InvalidArgument("bootstrap_accuracy: length mismatch");
  return bootstrap(y_true.size(), n_resamples, seed, [&](std::span<const std::size_t> idx) {
    std::size_t hit = 0;
    for (std::size_t i : idx) hit += y_true[i] == y_pred[i];
    return static_cast<double>(hit) / static_cast<double>(idx.size());
  });
}

BootstrapSummary bootstrap_mae(std::span<const double> y_true, std::span<const double> y_pred,
                               std::size_t n_resamples, std::uint64_t seed) {
  if (y_true.size() != y_pred.size()) throw InvalidArgument("bootstrap_mae: length mismatch");
  return bootstrap(y_true.size(), n_resamples, seed, [&](std::span<const std::size_t> idx) {
    double sum = 0.0;
    for (std::size_t i : idx) sum += std::abs(y_true[i] - y_pred[i]);
    return sum / static_cast<double>(idx.size());
  });
}

EvalReport evaluate_classifier(std::string model, std::span<const int> y_true, const Matrix& probs,
                               std::vector<std::string> class_names, std::size_t n_resamples,
                               std::uint64_t seed) {
  const std::size_t c = class_names.size();
  if (probs.rows() != y_true.size() || probs.cols() != c)
    throw InvalidArgument("evaluate_classifier: shape mismatch");
  std::vector<int> y_pred(y_true.size());
  for (std::size_t i = 0; i < y_true.size(); ++i)
    y_pred[i] = static_cast<int>(argmax_lowest(probs.row(i)));

  ClassificationMetrics m;
  m.confusion = confusion_matrix(y_true, y_pred, c);
  m.accuracy = accuracy(m.confusion);
  m.accuracy_bootstrap = bootstrap_accuracy(y_true, y_pred, n_resamples, seed);
  m.f1 = f1_per_class(m.confusion);
  for (std::size_t k = 0; k < c; ++k) {
    try {
      m.roc.emplace_back(roc_ovr(probs, y_true, k));
    } catch (const UndefinedMetric&) {
      m.roc.emplace_back(std::nullopt);
    }
  }
  EvalReport report;
  report.model = std::move(model);
  report.n_instances = y_true.size();
  report.class_names = std::move(class_names);
  report.classification = std::move(m);
  return report;
}

EvalReport evaluate_regressor(std::string model, std::span<const double> y_true,
                              std::span<const double> y_pred, std::size_t n_resamples,
                              std::uint64_t seed) {
  RegressionMetrics m;
  m.mae = mean_absolute_error(y_true, y_pred);
  m.mae_bootstrap = bootstrap_mae(y_true, y_pred, n_resamples, seed);
  EvalReport report;
  report.model = std::move(model);
  report.n_instances = y_true.size();
  report.regression = m;
  return report;
}

}  // namespace mrsig
