#include "mrsig/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <json.hpp>

#include "mrsig/errors.hpp"
#include "mrsig/random.hpp"

namespace mrsig {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "mrsig.forest";

// Training data shared by all trees of one fit call.
struct TrainingSet {
  const Matrix& x;
  std::span<const int> labels;     // classify
  std::span<const double> targets; // regress
  ForestMode mode;
  std::size_t n_classes;
};

struct SplitChoice {
  std::int32_t feature = DecisionTree::kLeaf;
  double threshold = 0.0;
  double score = -std::numeric_limits<double>::infinity();
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& data, const ForestParams& params, std::size_t mtry,
              std::uint64_t seed)
      : data_(data), params_(params), mtry_(mtry), rng_(seed) {}

  DecisionTree build() {
    const std::size_t m = data_.x.rows();
    samples_.resize(m);
    for (auto& s : samples_) s = uniform_index(rng_, m);
    feature_order_.resize(data_.x.cols());
    std::iota(feature_order_.begin(), feature_order_.end(), 0);

    struct Pending {
      std::size_t node, begin, end, depth;
    };
    std::vector<Pending> stack;
    stack.push_back({add_node(), 0, m, 0});
    while (!stack.empty()) {
      const Pending cur = stack.back();
      stack.pop_back();
      const SplitChoice split = find_split(cur.begin, cur.end, cur.depth);
      if (split.feature == DecisionTree::kLeaf) {
        make_leaf(cur.node, cur.begin, cur.end);
        continue;
      }
      const auto mid = std::partition(
          samples_.begin() + cur.begin, samples_.begin() + cur.end,
          [&](std::size_t s) { return data_.x(s, split.feature) <= split.threshold; });
      const std::size_t mid_index = static_cast<std::size_t>(mid - samples_.begin());
      const std::size_t l = add_node();
      const std::size_t r = add_node();
      tree_.feature[cur.node] = split.feature;
      tree_.threshold[cur.node] = split.threshold;
      tree_.left[cur.node] = static_cast<std::int32_t>(l);
      tree_.right[cur.node] = static_cast<std::int32_t>(r);
      // Right first so the left subtree is expanded first; node numbering is then
      // depth-first, which keeps serialized trees readable.
      stack.push_back({r, mid_index, cur.end, cur.depth + 1});
      stack.push_back({l, cur.begin, mid_index, cur.depth + 1});
    }
    return std::move(tree_);
  }

 private:
  std::size_t add_node() {
    tree_.feature.push_back(DecisionTree::kLeaf);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(0);
    tree_.right.push_back(0);
    return tree_.feature.size() - 1;
  }

  void make_leaf(std::size_t node, std::size_t begin, std::size_t end) {
    tree_.left[node] = static_cast<std::int32_t>(tree_.values.size());
    if (data_.mode == ForestMode::Classify) {
      const std::size_t base = tree_.values.size();
      tree_.values.resize(base + data_.n_classes, 0.0);
      for (std::size_t i = begin; i < end; ++i) tree_.values[base + data_.labels[samples_[i]]] += 1.0;
    } else {
      double sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) sum += data_.targets[samples_[i]];
      tree_.values.push_back(sum / static_cast<double>(end - begin));
    }
  }

  bool node_is_pure(std::size_t begin, std::size_t end) const {
    if (data_.mode == ForestMode::Classify) {
      const int first = data_.labels[samples_[begin]];
      for (std::size_t i = begin + 1; i < end; ++i)
        if (data_.labels[samples_[i]] != first) return false;
      return true;
    }
    const double first = data_.targets[samples_[begin]];
    for (std::size_t i = begin + 1; i < end; ++i)
      if (data_.targets[samples_[i]] != first) return false;
    return true;
  }

  SplitChoice find_split(std::size_t begin, std::size_t end, std::size_t depth) {
    SplitChoice best;
    const std::size_t n = end - begin;
    if (n < 2 * params_.min_leaf_size || n < 2) return best;
    if (params_.max_depth != 0 && depth >= params_.max_depth) return best;
    if (node_is_pure(begin, end)) return best;

    // Draw features without replacement; constant features do not use up the budget.
    std::size_t evaluated = 0;
    const std::size_t f = feature_order_.size();
    for (std::size_t k = 0; k < f && evaluated < mtry_; ++k) {
      const std::size_t pick = k + uniform_index(rng_, f - k);
      std::swap(feature_order_[k], feature_order_[pick]);
      if (evaluate_feature(feature_order_[k], begin, end, best)) ++evaluated;
    }
    return best;
  }

  // Scans all thresholds of one feature. Returns false if the feature is constant here.
  bool evaluate_feature(std::size_t feat, std::size_t begin, std::size_t end, SplitChoice& best) {
    const std::size_t n = end - begin;
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) order_[i] = {data_.x(samples_[begin + i], feat), samples_[begin + i]};
    std::sort(order_.begin(), order_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (order_.front().first == order_.back().first) return false;

    const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_leaf_size);
    if (data_.mode == ForestMode::Classify) {
      const std::size_t c = data_.n_classes;
      total_counts_.assign(c, 0.0);
      left_counts_.assign(c, 0.0);
      for (const auto& [v, s] : order_) total_counts_[data_.labels[s]] += 1.0;
      // Maximizing sum_c L_c^2/nL + sum_c R_c^2/nR minimizes weighted Gini impurity.
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (double t : total_counts_) right_sq += t * t;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const int label = data_.labels[order_[i].second];
        const double lc = left_counts_[label];
        const double rc = total_counts_[label] - lc;
        left_sq += 2.0 * lc + 1.0;
        right_sq -= 2.0 * rc - 1.0;
        left_counts_[label] = lc + 1.0;
        const std::size_t nl = i + 1;
        if (order_[i].first == order_[i + 1].first || nl < min_leaf || n - nl < min_leaf) continue;
        const double score = left_sq / nl + right_sq / (n - nl);
        consider(score, feat, order_[i].first, order_[i + 1].first, best);
      }
    } else {
      double total = 0.0;
      for (const auto& [v, s] : order_) total += data_.targets[s];
      double left = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left += data_.targets[order_[i].second];
        const std::size_t nl = i + 1;
        if (order_[i].first == order_[i + 1].first || nl < min_leaf || n - nl < min_leaf) continue;
        const double right = total - left;
        const double score = left * left / nl + right * right / (n - nl);
        consider(score, feat, order_[i].first, order_[i + 1].first, best);
      }
    }
    return true;
  }

  static void consider(double score, std::size_t feat, double lo, double hi, SplitChoice& best) {
    if (score <= best.score) return;
    double threshold = lo + (hi - lo) * 0.5;
    if (!(threshold < hi)) threshold = lo;
    best = {static_cast<std::int32_t>(feat), threshold, score};
  }

  const TrainingSet& data_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng rng_;
  DecisionTree tree_;
  std::vector<std::size_t> samples_;
  std::vector<std::size_t> feature_order_;
  std::vector<std::pair<double, std::size_t>> order_;
  std::vector<double> total_counts_;
  std::vector<double> left_counts_;
};

void check_matrix(const Matrix& x, std::size_t n_targets) {
  if (x.rows() < 2) throw InvalidArgument("forest fit: need at least 2 instances");
  if (x.cols() == 0) throw InvalidArgument("forest fit: no features");
  if (x.rows() != n_targets) throw InvalidArgument("forest fit: feature/target count mismatch");
  for (double v : x.data())
    if (!std::isfinite(v)) throw InvalidArgument("forest fit: non-finite feature value");
}

std::size_t resolve_mtry(const ForestParams& params, std::size_t f) {
  if (params.n_trees == 0) throw InvalidArgument("forest fit: tree count must be >= 1");
  if (params.features_per_split != 0) return std::min(params.features_per_split, f);
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(f))));
}

std::vector<DecisionTree> grow(const TrainingSet& data, const ForestParams& params,
                               std::uint64_t seed) {
  const std::size_t mtry = resolve_mtry(params, data.x.cols());
  std::vector<DecisionTree> trees(params.n_trees);
  parallel_for(params.n_trees, [&](std::size_t t) {
    trees[t] = TreeBuilder(data, params, mtry, derive_seed(seed, t)).build();
  });
  return trees;
}

}  // namespace

std::span<const double> DecisionTree::leaf_payload(std::span<const double> x,
                                                   std::size_t payload_width) const {
  std::size_t node = 0;
  while (feature[node] != kLeaf)
    node = static_cast<std::size_t>(x[feature[node]] <= threshold[node] ? left[node] : right[node]);
  return std::span<const double>(values).subspan(static_cast<std::size_t>(left[node]), payload_width);
}

TreeEnsemble TreeEnsemble::fit_classifier(const Matrix& features, std::span<const int> labels,
                                          std::size_t n_classes, const ForestParams& params,
                                          std::uint64_t seed) {
  check_matrix(features, labels.size());
  if (n_classes == 0) throw InvalidArgument("forest fit: n_classes must be positive");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
      throw InvalidArgument("forest fit: label " + std::to_string(y) + " out of range");
  TreeEnsemble out;
  out.mode_ = ForestMode::Classify;
  out.n_classes_ = n_classes;
  out.feature_count_ = features.cols();
  out.params_ = params;
  out.seed_ = seed;
  out.trees_ = grow({features, labels, {}, ForestMode::Classify, n_classes}, params, seed);
  return out;
}

TreeEnsemble TreeEnsemble::fit_regressor(const Matrix& features, std::span<const double> targets,
                                         const ForestParams& params, std::uint64_t seed) {
  check_matrix(features, targets.size());
  for (double y : targets)
    if (!std::isfinite(y)) throw InvalidArgument("forest fit: non-finite target");
  TreeEnsemble out;
  out.mode_ = ForestMode::Regress;
  out.feature_count_ = features.cols();
  out.params_ = params;
  out.seed_ = seed;
  out.trees_ = grow({features, {}, targets, ForestMode::Regress, 0}, params, seed);
  return out;
}

void TreeEnsemble::check_input(std::span<const double> x) const {
  if (x.size() != feature_count_)
    throw InvalidArgument("forest predict: expected " + std::to_string(feature_count_) +
                          " features, got " + std::to_string(x.size()));
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidArgument("forest predict: non-finite feature value");
}

std::vector<double> TreeEnsemble::predict_proba(std::span<const double> x) const {
  if (mode_ != ForestMode::Classify) throw InvalidArgument("predict_proba on a regressor");
  check_input(x);
  std::vector<double> probs(n_classes_, 0.0);
  for (const auto& tree : trees_) {
    const auto counts = tree.leaf_payload(x, n_classes_);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    for (std::size_t c = 0; c < n_classes_; ++c) probs[c] += counts[c] / total;
  }
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (double& p : probs) p *= inv;
  return probs;
}

int TreeEnsemble::predict_class(std::span<const double> x) const {
  return static_cast<int>(argmax_lowest(predict_proba(x)));
}

double TreeEnsemble::predict_value(std::span<const double> x) const {
  if (mode_ != ForestMode::Regress) throw InvalidArgument("predict_value on a classifier");
  check_input(x);
  double sum = 0.0;
  for (const auto& tree : trees_) sum += tree.leaf_payload(x, 1)[0];
  return sum / static_cast<double>(trees_.size());
}

std::string TreeEnsemble::serialize() const {
  nlohmann::ordered_json doc;
  doc["format"] = kFormatName;
  doc["version"] = kFormatVersion;
  doc["mode"] = mode_ == ForestMode::Classify ? "classify" : "regress";
  doc["n_classes"] = n_classes_;
  doc["feature_count"] = feature_count_;
  doc["seed"] = seed_;
  doc["params"] = {{"n_trees", params_.n_trees},
                   {"max_depth", params_.max_depth},
                   {"min_leaf_size", params_.min_leaf_size},
                   {"features_per_split", params_.features_per_split}};
  auto& trees = doc["trees"] = nlohmann::ordered_json::array();
  for (const auto& t : trees_)
    trees.push_back({{"feature", t.feature},
                     {"threshold", t.threshold},
                     {"left", t.left},
                     {"right", t.right},
                     {"values", t.values}});
  return doc.dump(1) + "\n";
}

TreeEnsemble TreeEnsemble::deserialize(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("forest document: ") + e.what());
  }
  if (doc.value("format", "") != kFormatName)
    throw InvalidArgument("forest document: unexpected format tag");
  if (doc.value("version", 0) != kFormatVersion)
    throw InvalidArgument("forest document: unsupported version");
  try {
    TreeEnsemble out;
    const auto mode = doc.at("mode").get<std::string>();
    if (mode == "classify")
      out.mode_ = ForestMode::Classify;
    else if (mode == "regress")
      out.mode_ = ForestMode::Regress;
    else
      throw InvalidArgument("forest document: unknown mode '" + mode + "'");
    out.n_classes_ = doc.at("n_classes").get<std::size_t>();
    out.feature_count_ = doc.at("feature_count").get<std::size_t>();
    out.seed_ = doc.at("seed").get<std::uint64_t>();
    const auto& p = doc.at("params");
    out.params_ = {p.at("n_trees").get<std::size_t>(), p.at("max_depth").get<std::size_t>(),
                   p.at("min_leaf_size").get<std::size_t>(),
                   p.at("features_per_split").get<std::size_t>()};
    const std::size_t width = out.mode_ == ForestMode::Classify ? out.n_classes_ : 1;
    for (const auto& t : doc.at("trees")) {
      DecisionTree tree;
      t.at("feature").get_to(tree.feature);
      t.at("threshold").get_to(tree.threshold);
      t.at("left").get_to(tree.left);
      t.at("right").get_to(tree.right);
      t.at("values").get_to(tree.values);
      const std::size_t nodes = tree.feature.size();
      if (nodes == 0 || tree.threshold.size() != nodes || tree.left.size() != nodes ||
          tree.right.size() != nodes)
        throw InvalidArgument("forest document: ragged node arrays");
      for (std::size_t i = 0; i < nodes; ++i) {
        if (tree.feature[i] == DecisionTree::kLeaf) {
          if (tree.left[i] < 0 || static_cast<std::size_t>(tree.left[i]) + width > tree.values.size())
            throw InvalidArgument("forest document: leaf payload out of range");
        } else if (tree.feature[i] < 0 ||
                   static_cast<std::size_t>(tree.feature[i]) >= out.feature_count_ ||
                   tree.left[i] <= static_cast<std::int32_t>(i) ||
                   tree.right[i] <= static_cast<std::int32_t>(i) ||
                   static_cast<std::size_t>(tree.left[i]) >= nodes ||
                   static_cast<std::size_t>(tree.right[i]) >= nodes) {
          throw InvalidArgument("forest document: bad internal node " + std::to_string(i));
        }
      }
      out.trees_.push_back(std::move(tree));
    }
    if (out.trees_.empty()) throw InvalidArgument("forest document: no trees");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("forest document: ") + e.what());
  }
}

std::size_t argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace mrsig
