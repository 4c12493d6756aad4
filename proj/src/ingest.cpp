#include "mrsig/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <string_view>
#include <unordered_map>

#include "mrsig/errors.hpp"

namespace mrsig {

namespace {

struct Row {
  std::string id;
  Group group;
  int week;
  int asrm;
  int qids;
  std::size_t line;
};

int parse_int(std::string_view field, std::size_t line, const char* name) {
  int v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size())
    throw ParseError(line, std::string(name) + " is not an integer: '" + std::string(field) + "'");
  return v;
}

Row parse_row(std::string_view text, std::size_t line) {
  std::array<std::string_view, 5> f;
  std::size_t n = 0;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = text.find(',', pos);
    if (n == f.size()) throw ParseError(line, "expected 5 fields, found more");
    f[n++] = text.substr(pos, next - pos);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  if (n != 5) throw ParseError(line, "expected 5 fields, found " + std::to_string(n));
  if (f[0].empty()) throw ParseError(line, "empty participant_id");
  const auto group = parse_group(f[1]);
  if (!group) throw ValidationError(line, "unknown group '" + std::string(f[1]) + "'");
  Row row{std::string(f[0]), *group, parse_int(f[2], line, "week"), parse_int(f[3], line, "asrm"),
          parse_int(f[4], line, "qids"), line};
  if (row.week < 0) throw ValidationError(line, "week must be >= 0");
  const bool asrm_missing = row.asrm == kMissingScore;
  const bool qids_missing = row.qids == kMissingScore;
  if (asrm_missing != qids_missing)
    throw ValidationError(line, "asrm and qids must be missing together (-1 for both) or answered together");
  if (!asrm_missing) {
    if (row.asrm < 0 || row.asrm > kAsrmMax)
      throw ValidationError(line, "asrm outside 0.." + std::to_string(kAsrmMax));
    if (row.qids < 0 || row.qids > kQidsMax)
      throw ValidationError(line, "qids outside 0.." + std::to_string(kQidsMax));
  }
  return row;
}

}  // namespace

IngestResult ingest(std::istream& in) {
  IngestResult result;
  std::string text;
  std::size_t line = 0;
  // Leading '#' lines carry provenance comments and precede the header.
  do {
    if (!std::getline(in, text)) throw ParseError(line + 1, "missing header");
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
  } while (!text.empty() && text[0] == '#');
  if (text != kCohortCsvHeader)
    throw ParseError(line, "header must be '" + std::string(kCohortCsvHeader) + "'");

  std::vector<Row> kept;
  std::map<std::pair<std::string, int>, std::size_t> first_row;  // (id, week) -> index in kept
  std::unordered_map<std::string, Group> groups;
  std::vector<std::string> order;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    Row row = parse_row(text, line);
    const auto [it, fresh] = groups.emplace(row.id, row.group);
    if (fresh) order.push_back(row.id);
    else if (it->second != row.group)
      throw ValidationError(line, "participant " + row.id + " listed under two groups");
    const auto key = std::make_pair(row.id, row.week);
    const auto seen = first_row.find(key);
    if (seen != first_row.end()) {
      const Row& first = kept[seen->second];
      if (first.asrm == row.asrm && first.qids == row.qids) ++result.exact_duplicates;
      else ++result.repeated_weeks;
      continue;
    }
    first_row.emplace(key, kept.size());
    kept.push_back(std::move(row));
  }

  std::unordered_map<std::string, ParticipantRecord> records;
  for (const Row& row : kept) {
    auto& rec = records[row.id];
    rec.id = row.id;
    rec.group = row.group;
    WeeklyObservation obs;
    obs.week = row.week;
    if (row.asrm != kMissingScore) obs.scores = PairedScores{row.asrm, row.qids};
    rec.weeks.push_back(obs);
  }
  for (const auto& id : order) {
    auto& rec = records[id];
    std::sort(rec.weeks.begin(), rec.weeks.end(),
              [](const WeeklyObservation& a, const WeeklyObservation& b) { return a.week < b.week; });
    if (rec.weeks.size() < kMinEligibleWeeks) {
      result.excluded.push_back({id, std::to_string(rec.weeks.size()) + " weeks, at least " +
                                         std::to_string(kMinEligibleWeeks) + " required"});
      continue;
    }
    result.cohort.participants.push_back(std::move(rec));
  }
  return result;
}

IngestResult ingest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return ingest(in);
}

void write_cohort_csv(const Cohort& cohort, std::ostream& out,
                      const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << kCohortCsvHeader << '\n';
  for (const auto& p : cohort.participants) {
    for (const auto& w : p.weeks) {
      out << p.id << ',' << to_string(p.group) << ',' << w.week << ',';
      if (w.scores) out << w.scores->asrm << ',' << w.scores->qids << '\n';
      else out << kMissingScore << ',' << kMissingScore << '\n';
    }
  }
}

void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path,
                      const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_cohort_csv(cohort, out, comments);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace mrsig
