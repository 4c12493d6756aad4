#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>

#include "mrsig/errors.hpp"
#include "mrsig/forest.hpp"
#include "mrsig/random.hpp"

using namespace mrsig;

namespace {

struct Blobs {
  Matrix x;
  std::vector<int> y;
};

/// Three Gaussian clusters in 2-D with some overlap.
Blobs blobs(std::size_t per_class, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, spread);
  const double centres[3][2] = {{0.0, 0.0}, {3.0, 0.0}, {1.5, 2.5}};
  Blobs b;
  for (std::size_t i = 0; i < per_class; ++i)
    for (int c = 0; c < 3; ++c) {
      b.x.append_row(std::vector<double>{centres[c][0] + g(rng), centres[c][1] + g(rng)});
      b.y.push_back(c);
    }
  return b;
}

// Straightforward recursive CART forest written independently of the library:
// impurity computed as 1 - sum p^2, its own RNG, pointer-based nodes.
class ReferenceForest {
 public:
  ReferenceForest(const Matrix& x, const std::vector<int>& y, int n_classes, int n_trees, unsigned seed)
      : n_classes_(n_classes), rng_(seed) {
    std::uniform_int_distribution<std::size_t> pick(0, x.rows() - 1);
    for (int t = 0; t < n_trees; ++t) {
      std::vector<std::size_t> idx(x.rows());
      for (auto& i : idx) i = pick(rng_);
      trees_.push_back(grow(x, y, idx));
    }
  }

  std::vector<double> proba(std::span<const double> v) const {
    std::vector<double> p(n_classes_, 0.0);
    for (const auto& t : trees_) {
      const Node* n = t.get();
      while (n->left) n = v[n->feature] <= n->threshold ? n->left.get() : n->right.get();
      for (int c = 0; c < n_classes_; ++c) p[c] += n->dist[c] / trees_.size();
    }
    return p;
  }

 private:
  struct Node {
    std::size_t feature = 0;
    double threshold = 0.0;
    std::unique_ptr<Node> left, right;
    std::vector<double> dist;
  };

  double gini(const std::vector<int>& y, const std::vector<std::size_t>& idx) const {
    std::vector<double> c(n_classes_, 0.0);
    for (auto i : idx) c[y[i]] += 1.0;
    double s = 1.0;
    for (double v : c) s -= (v / idx.size()) * (v / idx.size());
    return s;
  }

  std::unique_ptr<Node> grow(const Matrix& x, const std::vector<int>& y, std::vector<std::size_t> idx) {
    auto node = std::make_unique<Node>();
    node->dist.assign(n_classes_, 0.0);
    for (auto i : idx) node->dist[y[i]] += 1.0 / idx.size();
    if (gini(y, idx) == 0.0) return node;
    std::vector<std::size_t> feats(x.cols());
    std::iota(feats.begin(), feats.end(), 0);
    std::shuffle(feats.begin(), feats.end(), rng_);
    const std::size_t mtry = static_cast<std::size_t>(std::ceil(std::sqrt(double(x.cols()))));
    double best = std::numeric_limits<double>::infinity();
    std::size_t tried = 0;
    for (std::size_t f : feats) {
      if (tried == mtry) break;
      std::vector<double> vals;
      for (auto i : idx) vals.push_back(x(i, f));
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      if (vals.size() < 2) continue;
      ++tried;
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        const double thr = 0.5 * (vals[k] + vals[k + 1]);
        std::vector<std::size_t> l, r;
        for (auto i : idx) (x(i, f) <= thr ? l : r).push_back(i);
        const double score = (l.size() * gini(y, l) + r.size() * gini(y, r)) / idx.size();
        if (score < best) {
          best = score;
          node->feature = f;
          node->threshold = thr;
        }
      }
    }
    if (tried == 0) return node;
    std::vector<std::size_t> l, r;
    for (auto i : idx) (x(i, node->feature) <= node->threshold ? l : r).push_back(i);
    node->left = grow(x, y, l);
    node->right = grow(x, y, r);
    return node;
  }

  int n_classes_;
  std::mt19937 rng_;
  std::vector<std::unique_ptr<Node>> trees_;
};

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(ForestFit, SeparableSingleFeatureFitsPerfectly) {
  Matrix x;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    x.append_row(std::vector<double>{static_cast<double>(i)});
    y.push_back(i < 20 ? 0 : 1);
  }
  const auto f = TreeEnsemble::fit_classifier(x, y, 2, {}, 1);
  int correct = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) correct += f.predict_class(x.row(i)) == y[i];
  EXPECT_EQ(correct, 40);
}

TEST(ForestFit, ConstantTargetRegression) {
  const auto b = blobs(20, 1.0, 3);
  const std::vector<double> t(b.x.rows(), 4.25);
  const auto f = TreeEnsemble::fit_regressor(b.x, t, {}, 9);
  for (double v : {-100.0, 0.0, 2.0, 1e9}) EXPECT_EQ(f.predict_value(std::vector<double>{v, -v}), 4.25);
}

TEST(ForestFit, SameSeedSameEnsemble) {
  const auto b = blobs(30, 1.2, 4);
  const auto a = TreeEnsemble::fit_classifier(b.x, b.y, 3, {}, 77);
  const auto c = TreeEnsemble::fit_classifier(b.x, b.y, 3, {}, 77);
  EXPECT_EQ(a, c);
  EXPECT_EQ(a.serialize(), c.serialize());
  const auto d = TreeEnsemble::fit_classifier(b.x, b.y, 3, {}, 78);
  EXPECT_NE(a.serialize(), d.serialize());
}

TEST(ForestFit, HonoursHyperparameters) {
  const auto b = blobs(30, 1.5, 5);
  ForestParams p;
  p.n_trees = 7;
  p.max_depth = 2;
  p.min_leaf_size = 5;
  const auto f = TreeEnsemble::fit_classifier(b.x, b.y, 3, p, 1);
  EXPECT_EQ(f.tree_count(), 7u);
  for (const auto& t : f.trees()) {
    EXPECT_LE(t.node_count(), 7u);  // depth 2 binary tree
    for (std::size_t i = 0; i < t.node_count(); ++i) {
      if (t.feature[i] == DecisionTree::kLeaf) {
        double n = 0.0;
        for (int c = 0; c < 3; ++c) {
          EXPECT_GE(t.values[t.left[i] + c], 0.0);
          n += t.values[t.left[i] + c];
        }
        EXPECT_GE(n, 5.0);
      } else {
        EXPECT_LT(static_cast<std::size_t>(t.feature[i]), f.feature_count());
      }
    }
  }
}

TEST(ForestFit, RejectsBadInput) {
  Matrix one{{1.0}};
  EXPECT_THROW(TreeEnsemble::fit_classifier(one, std::vector<int>{0}, 2), InvalidArgument);
  Matrix nan{{1.0}, {std::numeric_limits<double>::quiet_NaN()}};
  EXPECT_THROW(TreeEnsemble::fit_classifier(nan, std::vector<int>{0, 1}, 2), InvalidArgument);
  Matrix two{{1.0}, {2.0}};
  EXPECT_THROW(TreeEnsemble::fit_classifier(two, std::vector<int>{0, 2}, 2), InvalidArgument);
  EXPECT_THROW(TreeEnsemble::fit_classifier(two, std::vector<int>{0}, 2), InvalidArgument);
  ForestParams none;
  none.n_trees = 0;
  EXPECT_THROW(TreeEnsemble::fit_regressor(two, std::vector<double>{0, 1}, none), InvalidArgument);
}

TEST(ForestPredict, ProbabilitiesAreDistributions) {
  const auto b = blobs(30, 1.5, 6);
  const auto f = TreeEnsemble::fit_classifier(b.x, b.y, 3, {}, 2);
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    // Includes points far outside the training hull.
    const std::vector<double> v{uniform_unit(rng) * 40 - 20, uniform_unit(rng) * 40 - 20};
    const auto p = f.predict_proba(v);
    ASSERT_EQ(p.size(), 3u);
    for (double q : p) EXPECT_GE(q, 0.0);
    EXPECT_NEAR(sum(p), 1.0, 1e-12);
    EXPECT_EQ(f.predict_class(v), static_cast<int>(argmax_lowest(p)));
  }
}

TEST(ForestPredict, SingleTreeWithPureLeavesIsOneHot) {
  const auto b = blobs(10, 0.3, 7);
  ForestParams p;
  p.n_trees = 1;
  const auto f = TreeEnsemble::fit_classifier(b.x, b.y, 3, p, 3);
  for (std::size_t i = 0; i < b.x.rows(); ++i) {
    const auto q = f.predict_proba(b.x.row(i));
    EXPECT_EQ(std::count(q.begin(), q.end(), 1.0), 1);
    EXPECT_EQ(std::count(q.begin(), q.end(), 0.0), 2);
  }
}

TEST(ForestPredict, ArgmaxTieBreak) {
  EXPECT_EQ(argmax_lowest(std::vector<double>{0.2, 0.5, 0.3}), 1u);
  EXPECT_EQ(argmax_lowest(std::vector<double>{0.5, 0.5, 0.0}), 0u);
  EXPECT_EQ(argmax_lowest(std::vector<double>{0.0, 0.5, 0.5}), 1u);
}

TEST(ForestPredict, RegressionAveragesTrees) {
  // Two stumps whose leaves output 4 and 6 for x <= 0.
  const std::string doc = R"({"format":"mrsig.forest","version":1,"mode":"regress","n_classes":0,
    "feature_count":1,"seed":0,"params":{"n_trees":2,"max_depth":0,"min_leaf_size":1,"features_per_split":0},
    "trees":[{"feature":[0,-1,-1],"threshold":[0,0,0],"left":[1,0,1],"right":[2,0,0],"values":[4,100]},
             {"feature":[-1],"threshold":[0],"left":[0],"right":[0],"values":[6]}]})";
  const auto f = TreeEnsemble::deserialize(doc);
  EXPECT_EQ(f.predict_value(std::vector<double>{-1.0}), 5.0);
  EXPECT_EQ(f.predict_value(std::vector<double>{1.0}), 53.0);
}

TEST(ForestPredict, ModeAndShapeMismatchThrow) {
  const auto b = blobs(10, 1.0, 9);
  const auto cls = TreeEnsemble::fit_classifier(b.x, b.y, 3, {}, 1);
  const std::vector<double> v{0.0, 0.0};
  EXPECT_THROW(cls.predict_value(v), InvalidArgument);
  EXPECT_THROW(cls.predict_proba(std::vector<double>{0.0}), InvalidArgument);
  EXPECT_THROW(cls.predict_proba(std::vector<double>{0.0, std::numeric_limits<double>::infinity()}),
               InvalidArgument);
  const auto reg = TreeEnsemble::fit_regressor(b.x, std::vector<double>(b.x.rows(), 1.0), {}, 1);
  EXPECT_THROW(reg.predict_proba(v), InvalidArgument);
  EXPECT_THROW(reg.predict_class(v), InvalidArgument);
}

TEST(ForestPredict, MonotoneRescalingKeepsTreeStructure) {
  const auto b = blobs(25, 1.2, 10);
  Matrix scaled = b.x;
  for (std::size_t i = 0; i < scaled.rows(); ++i) {
    scaled(i, 0) = std::exp(scaled(i, 0));
    scaled(i, 1) = std::cbrt(scaled(i, 1));
  }
  const auto f = TreeEnsemble::fit_classifier(b.x, b.y, 3, {}, 5);
  const auto g = TreeEnsemble::fit_classifier(scaled, b.y, 3, {}, 5);
  ASSERT_EQ(f.tree_count(), g.tree_count());
  for (std::size_t t = 0; t < f.tree_count(); ++t) {
    const auto& a = f.trees()[t];
    const auto& c = g.trees()[t];
    EXPECT_EQ(a.feature, c.feature);
    EXPECT_EQ(a.left, c.left);
    EXPECT_EQ(a.right, c.right);
    EXPECT_EQ(a.values, c.values);
  }
}

TEST(ForestPredict, AffineRescalingKeepsPredictions) {
  const auto b = blobs(25, 1.2, 10);
  Matrix scaled = b.x;
  for (std::size_t i = 0; i < scaled.rows(); ++i) {
    scaled(i, 0) = 4.0 * scaled(i, 0);
    scaled(i, 1) = 0.5 * scaled(i, 1);
  }
  const auto f = TreeEnsemble::fit_classifier(b.x, b.y, 3, {}, 5);
  const auto g = TreeEnsemble::fit_classifier(scaled, b.y, 3, {}, 5);
  // Power-of-two factors keep every midpoint threshold exact, so any input is routed alike.
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const std::vector<double> v{uniform_unit(rng) * 8 - 2, uniform_unit(rng) * 8 - 3};
    const std::vector<double> w{4.0 * v[0], 0.5 * v[1]};
    EXPECT_EQ(f.predict_proba(v), g.predict_proba(w));
  }
}

TEST(ForestPredict, AgreesWithIndependentReferenceForest) {
  const auto train = blobs(60, 0.9, 11);
  const auto test = blobs(100, 0.9, 12);
  const auto f = TreeEnsemble::fit_classifier(train.x, train.y, 3, {}, 13);
  const ReferenceForest ref(train.x, train.y, 3, 100, 14);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < test.x.rows(); ++i)
    agree += f.predict_class(test.x.row(i)) == static_cast<int>(argmax_lowest(ref.proba(test.x.row(i))));
  EXPECT_GE(static_cast<double>(agree) / test.x.rows(), 0.90);
}

TEST(ForestSerialize, RoundTrip) {
  const auto b = blobs(20, 1.0, 15);
  ForestParams p;
  p.n_trees = 5;
  const auto f = TreeEnsemble::fit_classifier(b.x, b.y, 3, p, 99);
  const auto text = f.serialize();
  const auto g = TreeEnsemble::deserialize(text);
  EXPECT_EQ(f, g);
  EXPECT_EQ(g.serialize(), text);
  const auto r = TreeEnsemble::fit_regressor(b.x, std::vector<double>(b.y.begin(), b.y.end()), p, 3);
  EXPECT_EQ(TreeEnsemble::deserialize(r.serialize()), r);
}

TEST(ForestSerialize, RejectsForeignDocuments) {
  EXPECT_THROW(TreeEnsemble::deserialize("not json"), InvalidArgument);
  EXPECT_THROW(TreeEnsemble::deserialize(R"({"format":"other","version":1})"), InvalidArgument);
  EXPECT_THROW(TreeEnsemble::deserialize(R"({"format":"mrsig.forest","version":2})"), InvalidArgument);
  const std::string bad_child = R"({"format":"mrsig.forest","version":1,"mode":"regress","n_classes":0,
    "feature_count":1,"seed":0,"params":{"n_trees":1,"max_depth":0,"min_leaf_size":1,"features_per_split":0},
    "trees":[{"feature":[0],"threshold":[0],"left":[0],"right":[0],"values":[]}]})";
  EXPECT_THROW(TreeEnsemble::deserialize(bad_child), InvalidArgument);
}
