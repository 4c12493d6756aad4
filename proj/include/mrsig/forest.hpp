#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrsig/matrix.hpp"

namespace mrsig {

enum class ForestMode { Classify, Regress };

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;           // 0: grow until pure or too small
  std::size_t min_leaf_size = 1;
  std::size_t features_per_split = 0;  // 0: ceil(sqrt(feature_count))

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// One axis-aligned binary tree stored as flat node arrays.
struct DecisionTree {
  static constexpr std::int32_t kLeaf = -1;

  // Internal node i: go left when x[feature[i]] <= threshold[i].
  // Leaf i: feature[i] == kLeaf and left[i] is the offset of its payload in `values`
  // (n_classes class counts, or a single mean target).
  std::vector<std::int32_t> feature;
  std::vector<double> threshold;
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<double> values;

  std::size_t node_count() const noexcept { return feature.size(); }
  /// Payload of the leaf reached by x.
  std::span<const double> leaf_payload(std::span<const double> x, std::size_t payload_width) const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

/// Bagged ensemble of decision trees, either a probabilistic classifier (Gini splits,
/// leaves hold class counts) or a regressor (variance-reduction splits, leaves hold means).
class TreeEnsemble {
 public:
  static TreeEnsemble fit_classifier(const Matrix& features, std::span<const int> labels,
                                     std::size_t n_classes, const ForestParams& params = {},
                                     std::uint64_t seed = 0);
  static TreeEnsemble fit_regressor(const Matrix& features, std::span<const double> targets,
                                    const ForestParams& params = {}, std::uint64_t seed = 0);

  ForestMode mode() const noexcept { return mode_; }
  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t feature_count() const noexcept { return feature_count_; }
  std::size_t tree_count() const noexcept { return trees_.size(); }
  const ForestParams& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  /// Mean over trees of the leaf class frequencies. Classifier only.
  std::vector<double> predict_proba(std::span<const double> x) const;
  /// argmax of predict_proba, ties to the lowest class index. Classifier only.
  int predict_class(std::span<const double> x) const;
  /// Mean of the tree outputs. Regressor only.
  double predict_value(std::span<const double> x) const;

  /// Versioned JSON document; see docs in README.
  std::string serialize() const;
  static TreeEnsemble deserialize(std::string_view text);

  friend bool operator==(const TreeEnsemble&, const TreeEnsemble&) = default;

 private:
  TreeEnsemble() = default;
  void check_input(std::span<const double> x) const;

  ForestMode mode_ = ForestMode::Classify;
  std::size_t n_classes_ = 0;
  std::size_t feature_count_ = 0;
  ForestParams params_;
  std::uint64_t seed_ = 0;
  std::vector<DecisionTree> trees_;
};

/// Index of the largest entry; the lowest index wins ties.
std::size_t argmax_lowest(std::span<const double> values);

}  // namespace mrsig
