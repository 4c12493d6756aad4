#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mrsig/cohort.hpp"
#include "mrsig/matrix.hpp"
#include "mrsig/random.hpp"

namespace mrsig {

/// Output of feed_forward_fill: n x 2 filled scores (ASRM, QIDS) and the
/// cumulative count of missing weeks up to and including each week.
struct FilledWindow {
  Matrix filled;
  std::vector<int> missing_count;
};

/// A window after every encoding step; normalized_path is (n+1) x 3.
struct EncodedWindow {
  std::size_t length = 0;
  Matrix filled;
  std::vector<int> missing_count;
  Matrix normalized_path;
};

/// Replaces each missing week with the nearest earlier answered week. Leading
/// missing weeks take the first answered week; an all-missing window is filled with 0.
FilledWindow feed_forward_fill(std::span<const WeeklyObservation> window);

/// Scales each week to (ASRM/20, QIDS/27, missing_count/n), then takes running sums
/// with a zero row prepended.
Matrix normalize_and_cumulate(const Matrix& filled, std::span<const int> missing_count,
                              std::size_t window_length);

EncodedWindow encode_window(std::span<const WeeklyObservation> window);

/// Missing-response-incorporated signature features: levels 1..p of the signature
/// of the encoded 3-channel path. 12 values for p = 2.
std::vector<double> mrsf(std::span<const WeeklyObservation> window, std::size_t level);

/// Per-instrument mean over answered weeks; (0, 0) if nothing was answered.
std::array<double, 2> naive_features(std::span<const WeeklyObservation> window);

/// Uniform start index for a contiguous block of `length` weeks out of `record_weeks`.
std::size_t draw_window_start(std::size_t record_weeks, std::size_t length, Rng& rng);

/// Contiguous block of `length` weeks starting at a uniformly drawn valid index.
/// The span views into `record`.
std::span<const WeeklyObservation> extract_window(const ParticipantRecord& record,
                                                  std::size_t length, Rng& rng);

}  // namespace mrsig
