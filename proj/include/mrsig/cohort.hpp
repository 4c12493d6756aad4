#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mrsig {

enum class Group { BD = 0, HC = 1, BPD = 2 };
inline constexpr std::array<Group, 3> kGroups = {Group::BD, Group::HC, Group::BPD};

std::string_view to_string(Group g);
std::optional<Group> parse_group(std::string_view s);

enum class Instrument { ASRM, QIDS };
inline constexpr std::array<Instrument, 2> kInstruments = {Instrument::ASRM, Instrument::QIDS};

std::string_view to_string(Instrument i);
std::optional<Instrument> parse_instrument(std::string_view s);
/// Largest valid total score: 20 for ASRM, 27 for QIDS.
int instrument_max(Instrument i);

inline constexpr int kAsrmMax = 20;
inline constexpr int kQidsMax = 27;
/// Sentinel for a missing response in the CSV format.
inline constexpr int kMissingScore = -1;

/// Paired weekly totals. A week is either fully answered or fully missing.
struct PairedScores {
  int asrm = 0;
  int qids = 0;
  friend bool operator==(const PairedScores&, const PairedScores&) = default;
};

struct WeeklyObservation {
  int week = 0;
  std::optional<PairedScores> scores;  // nullopt = missing response

  bool missing() const noexcept { return !scores.has_value(); }
  /// Score for one instrument, nullopt when missing.
  std::optional<int> score(Instrument i) const;

  friend bool operator==(const WeeklyObservation&, const WeeklyObservation&) = default;
};

struct ParticipantRecord {
  std::string id;
  Group group = Group::HC;
  std::vector<WeeklyObservation> weeks;  // strictly increasing week index

  friend bool operator==(const ParticipantRecord&, const ParticipantRecord&) = default;
};

struct Cohort {
  std::vector<ParticipantRecord> participants;

  friend bool operator==(const Cohort&, const Cohort&) = default;
};

/// Minimum record length for any task.
inline constexpr std::size_t kMinEligibleWeeks = 20;

}  // namespace mrsig
