#include "mrsig/sigcore.hpp"

#include <cmath>
#include <string>

#include "mrsig/errors.hpp"

namespace mrsig {

namespace {

std::vector<std::size_t> level_offsets(std::size_t d, std::size_t p) {
  std::vector<std::size_t> offsets(p + 2);
  std::size_t width = 1;
  offsets[0] = 0;
  for (std::size_t k = 0; k <= p; ++k) {
    offsets[k + 1] = offsets[k] + width;
    width *= d;
  }
  return offsets;
}

void check_shape(std::size_t d, std::size_t p) {
  if (d == 0) throw InvalidArgument("signature dimension must be positive");
  if (p == 0) throw InvalidArgument("signature level must be positive");
}

}  // namespace

TruncatedSignature::TruncatedSignature(std::size_t dimension, std::size_t level)
    : dimension_(dimension), level_(level) {
  check_shape(dimension, level);
  offsets_ = level_offsets(dimension, level);
  coefficients_.assign(offsets_.back(), 0.0);
  coefficients_[0] = 1.0;
}

TruncatedSignature::TruncatedSignature(std::size_t dimension, std::size_t level,
                                       std::vector<double> coefficients)
    : dimension_(dimension), level_(level) {
  check_shape(dimension, level);
  offsets_ = level_offsets(dimension, level);
  if (coefficients.size() != offsets_.back())
    throw InvalidArgument("expected " + std::to_string(offsets_.back()) + " coefficients, got " +
                          std::to_string(coefficients.size()));
  if (coefficients[0] != 1.0) throw InvalidArgument("level-0 coefficient must be 1");
  coefficients_ = std::move(coefficients);
}

std::span<const double> TruncatedSignature::level_coefficients(std::size_t k) const {
  if (k > level_) throw InvalidArgument("level " + std::to_string(k) + " beyond truncation");
  return std::span<const double>(coefficients_).subspan(offsets_[k], offsets_[k + 1] - offsets_[k]);
}

std::span<double> TruncatedSignature::mutable_level(std::size_t k) {
  return std::span<double>(coefficients_).subspan(offsets_[k], offsets_[k + 1] - offsets_[k]);
}

double TruncatedSignature::at(std::span<const std::size_t> multi_index) const {
  const std::size_t k = multi_index.size();
  if (k > level_) throw InvalidArgument("multi-index longer than truncation level");
  std::size_t flat = 0;
  for (std::size_t letter : multi_index) {
    if (letter >= dimension_) throw InvalidArgument("multi-index letter out of range");
    flat = flat * dimension_ + letter;
  }
  return coefficients_[offsets_[k] + flat];
}

std::vector<double> TruncatedSignature::flatten_without_constant() const {
  return {coefficients_.begin() + 1, coefficients_.end()};
}

TruncatedSignature segment_signature(std::span<const double> increment, std::size_t level) {
  for (double x : increment)
    if (!std::isfinite(x)) throw InvalidArgument("segment_signature: non-finite increment");
  TruncatedSignature sig(increment.size(), level);
  const std::size_t d = increment.size();
  auto first = sig.mutable_level(1);
  std::copy(increment.begin(), increment.end(), first.begin());
  for (std::size_t k = 2; k <= level; ++k) {
    const auto prev = sig.level_coefficients(k - 1);
    auto cur = sig.mutable_level(k);
    const double inv_k = 1.0 / static_cast<double>(k);
    std::size_t out = 0;
    for (double head : prev)
      for (std::size_t j = 0; j < d; ++j) cur[out++] = head * increment[j] * inv_k;
  }
  return sig;
}

TruncatedSignature chen_product(const TruncatedSignature& a, const TruncatedSignature& b) {
  if (a.dimension() != b.dimension() || a.level() != b.level())
    throw InvalidArgument("chen_product: mismatched dimension or level");
  TruncatedSignature out(a.dimension(), a.level());
  for (std::size_t k = 1; k <= a.level(); ++k) {
    auto dest = out.mutable_level(k);
    // (a (x) b)_k = sum_{j=0..k} a_j (x) b_{k-j}; the level-j prefix index is the
    // major part of the flat index.
    for (std::size_t j = 0; j <= k; ++j) {
      const auto left = a.level_coefficients(j);
      const auto right = b.level_coefficients(k - j);
      std::size_t pos = 0;
      for (double l : left) {
        if (l == 0.0) {
          pos += right.size();
          continue;
        }
        for (double r : right) dest[pos++] += l * r;
      }
    }
  }
  return out;
}

TruncatedSignature stream_signature(const Matrix& points, std::size_t level) {
  if (points.rows() < 2)
    throw InsufficientData("stream_signature: need at least 2 points, got " +
                           std::to_string(points.rows()));
  const std::size_t d = points.cols();
  std::vector<double> increment(d);
  TruncatedSignature acc(d, level);
  for (std::size_t t = 1; t < points.rows(); ++t) {
    const auto prev = points.row(t - 1);
    const auto cur = points.row(t);
    for (std::size_t i = 0; i < d; ++i) increment[i] = cur[i] - prev[i];
    acc = chen_product(acc, segment_signature(increment, level));
  }
  return acc;
}

std::size_t signature_feature_count(std::size_t dimension, std::size_t level) {
  std::size_t total = 0;
  std::size_t width = 1;
  for (std::size_t k = 1; k <= level; ++k) {
    width *= dimension;
    total += width;
  }
  return total;
}

}  // namespace mrsig
