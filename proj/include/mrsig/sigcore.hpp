#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mrsig/matrix.hpp"

namespace mrsig {

/// Element of the free tensor algebra over R^d truncated at level p.
///
/// Level k holds d^k coefficients in lexicographic multi-index order: the
/// coefficient of (i1, ..., ik) (0-based letters) lives at
/// i1*d^(k-1) + ... + ik within that level. Level 0 is the scalar 1.
class TruncatedSignature {
 public:
  /// The group identity (1, 0, 0, ...).
  TruncatedSignature(std::size_t dimension, std::size_t level);

  /// Takes all levels concatenated, level 0 first. Level 0 must be exactly 1.
  TruncatedSignature(std::size_t dimension, std::size_t level, std::vector<double> coefficients);

  static TruncatedSignature identity(std::size_t dimension, std::size_t level) {
    return {dimension, level};
  }

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t level() const noexcept { return level_; }
  /// Total coefficient count, sum over k = 0..p of d^k.
  std::size_t size() const noexcept { return coefficients_.size(); }

  std::span<const double> level_coefficients(std::size_t k) const;

  /// Coefficient for a multi-index of 0-based letters; the empty index is level 0.
  double at(std::span<const std::size_t> multi_index) const;
  double at(std::initializer_list<std::size_t> multi_index) const {
    return at(std::span<const std::size_t>(multi_index.begin(), multi_index.size()));
  }

  /// All coefficients, level 0 first.
  std::span<const double> coefficients() const noexcept { return coefficients_; }

  /// Levels 1..p concatenated: the feature vector used downstream.
  std::vector<double> flatten_without_constant() const;

  friend bool operator==(const TruncatedSignature&, const TruncatedSignature&) = default;

 private:
  friend TruncatedSignature segment_signature(std::span<const double>, std::size_t);
  friend TruncatedSignature chen_product(const TruncatedSignature&, const TruncatedSignature&);

  std::span<double> mutable_level(std::size_t k);

  std::size_t dimension_;
  std::size_t level_;
  std::vector<std::size_t> offsets_;  // offsets_[k] = start of level k, offsets_[p+1] = size
  std::vector<double> coefficients_;
};

/// Signature of the straight line with the given increment: the truncated tensor
/// exponential, level k = increment^{(x)k} / k!.
TruncatedSignature segment_signature(std::span<const double> increment, std::size_t level);

/// Truncated tensor product; the signature of a concatenated path is the product of
/// the signatures of its pieces.
TruncatedSignature chen_product(const TruncatedSignature& a, const TruncatedSignature& b);

/// Signature of the piecewise-linear interpolation of the rows of `points`.
/// No basepoint is added.
TruncatedSignature stream_signature(const Matrix& points, std::size_t level);

/// Number of coefficients in levels 1..p for dimension d.
std::size_t signature_feature_count(std::size_t dimension, std::size_t level);

}  // namespace mrsig
