#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mrsig/cohort.hpp"

namespace mrsig {

/// Header every cohort CSV must start with.
inline constexpr std::string_view kCohortCsvHeader = "participant_id,group,week,asrm,qids";

struct Exclusion {
  std::string id;
  std::string reason;
};

struct IngestResult {
  Cohort cohort;                     // participants in first-appearance order, weeks sorted
  std::vector<Exclusion> excluded;   // dropped participants with the reason
  std::size_t exact_duplicates = 0;  // identical rows removed
  std::size_t repeated_weeks = 0;    // later rows for an already seen (participant, week)
};

/// Parses the cohort CSV. Lines starting with '#' before the header are skipped. Malformed rows raise ParseError, schema violations (one-sided
/// missing pair, out-of-range score, unknown or changing group) raise ValidationError.
/// Participants with fewer than kMinEligibleWeeks weeks are dropped and listed in `excluded`.
IngestResult ingest(std::istream& in);
IngestResult ingest(const std::filesystem::path& path);

/// Writes `cohort` in the format `ingest` reads, -1 for missing weeks. Each `comments`
/// entry becomes a '#' line ahead of the header.
void write_cohort_csv(const Cohort& cohort, std::ostream& out,
                      const std::vector<std::string>& comments = {});
void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path,
                      const std::vector<std::string>& comments = {});

}  // namespace mrsig
