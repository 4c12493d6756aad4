#include "mrsig/encode.hpp"

#include <algorithm>
#include <string>

#include "mrsig/errors.hpp"
#include "mrsig/sigcore.hpp"

namespace mrsig {

FilledWindow feed_forward_fill(std::span<const WeeklyObservation> window) {
  if (window.empty()) throw InsufficientData("feed_forward_fill: empty window");
  const std::size_t n = window.size();
  FilledWindow out{Matrix(n, 2), std::vector<int>(n, 0)};

  // Back-fill value for leading gaps.
  PairedScores last{0, 0};
  if (auto first = std::find_if(window.begin(), window.end(),
                                [](const WeeklyObservation& w) { return !w.missing(); });
      first != window.end())
    last = *first->scores;

  int missing = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (window[t].missing())
      ++missing;
    else
      last = *window[t].scores;
    out.filled(t, 0) = last.asrm;
    out.filled(t, 1) = last.qids;
    out.missing_count[t] = missing;
  }
  return out;
}

Matrix normalize_and_cumulate(const Matrix& filled, std::span<const int> missing_count,
                              std::size_t window_length) {
  if (window_length == 0) throw InsufficientData("normalize_and_cumulate: empty window");
  if (filled.rows() != window_length || missing_count.size() != window_length ||
      filled.cols() != 2)
    throw InvalidArgument("normalize_and_cumulate: expected " + std::to_string(window_length) +
                          " x 2 scores and matching missing counts");
  const double n = static_cast<double>(window_length);
  Matrix path(window_length + 1, 3, 0.0);
  for (std::size_t t = 0; t < window_length; ++t) {
    path(t + 1, 0) = path(t, 0) + filled(t, 0) / kAsrmMax;
    path(t + 1, 1) = path(t, 1) + filled(t, 1) / kQidsMax;
    path(t + 1, 2) = path(t, 2) + missing_count[t] / n;
  }
  return path;
}

EncodedWindow encode_window(std::span<const WeeklyObservation> window) {
  auto [filled, counts] = feed_forward_fill(window);
  Matrix path = normalize_and_cumulate(filled, counts, window.size());
  return {window.size(), std::move(filled), std::move(counts), std::move(path)};
}

std::vector<double> mrsf(std::span<const WeeklyObservation> window, std::size_t level) {
  if (window.size() < 2)
    throw InsufficientData("mrsf: need at least 2 weeks, got " + std::to_string(window.size()));
  return stream_signature(encode_window(window).normalized_path, level).flatten_without_constant();
}

std::array<double, 2> naive_features(std::span<const WeeklyObservation> window) {
  double asrm = 0.0;
  double qids = 0.0;
  std::size_t answered = 0;
  for (const auto& w : window) {
    if (w.missing()) continue;
    asrm += w.scores->asrm;
    qids += w.scores->qids;
    ++answered;
  }
  if (answered == 0) return {0.0, 0.0};
  return {asrm / answered, qids / answered};
}

std::size_t draw_window_start(std::size_t record_weeks, std::size_t length, Rng& rng) {
  if (length == 0) throw InvalidArgument("window length must be positive");
  if (record_weeks < length)
    throw InsufficientData("record has " + std::to_string(record_weeks) +
                           " weeks, window needs " + std::to_string(length));
  return uniform_index(rng, record_weeks - length + 1);
}

std::span<const WeeklyObservation> extract_window(const ParticipantRecord& record,
                                                  std::size_t length, Rng& rng) {
  const std::size_t start = draw_window_start(record.weeks.size(), length, rng);
  return std::span<const WeeklyObservation>(record.weeks).subspan(start, length);
}

}  // namespace mrsig
