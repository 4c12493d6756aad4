#pragma once

// JSON form of EvalReport, schema "mrsig.eval_report" version 1.

#include <json.hpp>

#include "mrsig/eval.hpp"

namespace mrsig {

inline constexpr int kEvalReportVersion = 1;

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

}  // namespace mrsig
