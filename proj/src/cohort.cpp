#include "mrsig/cohort.hpp"

namespace mrsig {

std::string_view to_string(Group g) {
  switch (g) {
    case Group::BD: return "BD";
    case Group::HC: return "HC";
    case Group::BPD: return "BPD";
  }
  return "?";
}

std::optional<Group> parse_group(std::string_view s) {
  if (s == "BD") return Group::BD;
  if (s == "HC") return Group::HC;
  if (s == "BPD") return Group::BPD;
  return std::nullopt;
}

std::string_view to_string(Instrument i) { return i == Instrument::ASRM ? "ASRM" : "QIDS"; }

std::optional<Instrument> parse_instrument(std::string_view s) {
  if (s == "ASRM" || s == "asrm") return Instrument::ASRM;
  if (s == "QIDS" || s == "qids") return Instrument::QIDS;
  return std::nullopt;
}

int instrument_max(Instrument i) { return i == Instrument::ASRM ? kAsrmMax : kQidsMax; }

std::optional<int> WeeklyObservation::score(Instrument i) const {
  if (!scores) return std::nullopt;
  return i == Instrument::ASRM ? scores->asrm : scores->qids;
}

}  // namespace mrsig
