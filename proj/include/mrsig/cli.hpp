#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mrsig/spectrum.hpp"
#include "mrsig/synth.hpp"
#include "mrsig/tasks.hpp"

namespace mrsig::cli {

/// Tool version written into every output.
std::string_view tool_version();

struct SynthSettings {
  std::array<std::size_t, 3> sizes{49, 45, 32};
  std::size_t weeks = 51;
  bool no_signal = false;
};

struct SpectrumSettings {
  std::size_t resolution = 200;
  std::optional<double> bandwidth;
};

/// Everything a command needs. Built from defaults, then the JSON config file, then
/// command-line flags, in that order.
struct RunConfig {
  std::string command;
  TaskConfig task;
  SynthSettings synth;
  SpectrumSettings spectrum;
  std::filesystem::path input;   // cohort CSV, run directory (spectrum) or points CSV (sig)
  std::filesystem::path output;  // parent of the run directory
};

/// Applies the keys of a config document to `config`. Unknown keys are rejected.
void apply_config(const nlohmann::json& doc, RunConfig& config);

/// Settings that influence results, in a fixed key order. Paths are left out.
nlohmann::ordered_json canonical_config(const RunConfig& config);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);

/// Hash of the canonical config and the bytes of every input file, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Runs one command line. Returns the process exit code; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace mrsig::cli
