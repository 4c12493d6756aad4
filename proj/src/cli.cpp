#include "mrsig/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "mrsig/errors.hpp"
#include "mrsig/eval_json.hpp"
#include "mrsig/ingest.hpp"
#include "mrsig/sigcore.hpp"

namespace mrsig::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view tool_version() { return MRSIG_VERSION; }

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

Group group_from(std::string_view s) {
  const auto g = parse_group(s);
  if (!g) throw InvalidArgument("unknown group '" + std::string(s) + "'");
  return *g;
}

Instrument instrument_from(std::string_view s) {
  const auto i = parse_instrument(s);
  if (!i) throw InvalidArgument("unknown instrument '" + std::string(s) + "'");
  return *i;
}

template <class T>
T get_number(const json& j, const char* key) {
  if (!j.is_number()) throw InvalidArgument(std::string("config key '") + key + "' must be a number");
  if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer() || (std::is_unsigned_v<T> && j.get<std::int64_t>() < 0 &&
                                   !j.is_number_unsigned()))
      throw InvalidArgument(std::string("config key '") + key + "' must be a non-negative integer");
  }
  return j.get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const char* where) {
  if (!obj.is_object()) throw InvalidArgument(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InvalidArgument(std::string("unknown config key '") + key + "' in " + where);
  }
}

bool is_task(std::string_view command) {
  return command == "classify" || command == "predict-state" || command == "predict-score";
}

ordered_json groups_json(const std::vector<Group>& groups) {
  ordered_json arr = ordered_json::array();
  for (Group g : groups) arr.push_back(std::string(to_string(g)));
  return arr;
}

}  // namespace

void apply_config(const json& doc, RunConfig& c) {
  reject_unknown(doc,
                 {"seed", "window_length", "signature_level", "split_fraction", "instrument",
                  "groups", "forest", "bootstrap_resamples", "rollout_horizon", "leave_one_out",
                  "synth", "spectrum", "input", "output"},
                 "config");
  auto& t = c.task;
  for (const auto& [key, v] : doc.items()) {
    if (key == "seed") t.seed = get_number<std::uint64_t>(v, "seed");
    else if (key == "window_length") t.window_length = get_number<std::size_t>(v, "window_length");
    else if (key == "signature_level") t.signature_level = get_number<std::size_t>(v, "signature_level");
    else if (key == "split_fraction") t.split_fraction = get_number<double>(v, "split_fraction");
    else if (key == "bootstrap_resamples")
      t.bootstrap_resamples = get_number<std::size_t>(v, "bootstrap_resamples");
    else if (key == "rollout_horizon") t.rollout_horizon = get_number<std::size_t>(v, "rollout_horizon");
    else if (key == "leave_one_out") {
      if (!v.is_boolean()) throw InvalidArgument("config key 'leave_one_out' must be a boolean");
      t.leave_one_out = v.get<bool>();
    } else if (key == "instrument") {
      if (v.is_null()) t.instrument.reset();
      else if (v.is_string()) t.instrument = instrument_from(v.get<std::string>());
      else throw InvalidArgument("config key 'instrument' must be a string or null");
    } else if (key == "groups") {
      if (!v.is_array()) throw InvalidArgument("config key 'groups' must be an array");
      t.groups.clear();
      for (const auto& g : v) {
        if (!g.is_string()) throw InvalidArgument("config key 'groups' must hold strings");
        t.groups.push_back(group_from(g.get<std::string>()));
      }
    } else if (key == "forest") {
      reject_unknown(v, {"n_trees", "max_depth", "min_leaf_size", "features_per_split"}, "forest");
      if (v.contains("n_trees")) t.forest.n_trees = get_number<std::size_t>(v["n_trees"], "n_trees");
      if (v.contains("max_depth")) t.forest.max_depth = get_number<std::size_t>(v["max_depth"], "max_depth");
      if (v.contains("min_leaf_size"))
        t.forest.min_leaf_size = get_number<std::size_t>(v["min_leaf_size"], "min_leaf_size");
      if (v.contains("features_per_split"))
        t.forest.features_per_split =
            get_number<std::size_t>(v["features_per_split"], "features_per_split");
    } else if (key == "synth") {
      reject_unknown(v, {"sizes", "weeks", "no_signal"}, "synth");
      if (v.contains("sizes")) {
        const auto& s = v["sizes"];
        if (!s.is_array() || s.size() != 3)
          throw InvalidArgument("config key 'synth.sizes' must be [BD, HC, BPD]");
        for (std::size_t g = 0; g < 3; ++g) c.synth.sizes[g] = get_number<std::size_t>(s[g], "synth.sizes");
      }
      if (v.contains("weeks")) c.synth.weeks = get_number<std::size_t>(v["weeks"], "synth.weeks");
      if (v.contains("no_signal")) {
        if (!v["no_signal"].is_boolean()) throw InvalidArgument("config key 'synth.no_signal' must be a boolean");
        c.synth.no_signal = v["no_signal"].get<bool>();
      }
    } else if (key == "spectrum") {
      reject_unknown(v, {"resolution", "bandwidth"}, "spectrum");
      if (v.contains("resolution"))
        c.spectrum.resolution = get_number<std::size_t>(v["resolution"], "spectrum.resolution");
      if (v.contains("bandwidth")) {
        if (v["bandwidth"].is_null()) c.spectrum.bandwidth.reset();
        else c.spectrum.bandwidth = get_number<double>(v["bandwidth"], "spectrum.bandwidth");
      }
    } else if (key == "input") {
      if (!v.is_string()) throw InvalidArgument("config key 'input' must be a string");
      c.input = v.get<std::string>();
    } else if (key == "output") {
      if (!v.is_string()) throw InvalidArgument("config key 'output' must be a string");
      c.output = v.get<std::string>();
    }
  }
}

ordered_json canonical_config(const RunConfig& c) {
  ordered_json j;
  j["command"] = c.command;
  const auto& t = c.task;
  if (c.command == "synth") {
    j["seed"] = t.seed;
    j["synth"] = {{"sizes", c.synth.sizes}, {"weeks", c.synth.weeks}, {"no_signal", c.synth.no_signal}};
  } else if (is_task(c.command)) {
    j["seed"] = t.seed;
    j["window_length"] = t.window_length;
    j["signature_level"] = t.signature_level;
    j["split_fraction"] = t.split_fraction;
    j["groups"] = groups_json(t.groups);
    j["forest"] = {{"n_trees", t.forest.n_trees},
                   {"max_depth", t.forest.max_depth},
                   {"min_leaf_size", t.forest.min_leaf_size},
                   {"features_per_split", t.forest.features_per_split}};
    j["bootstrap_resamples"] = t.bootstrap_resamples;
    if (c.command == "classify") {
      j["leave_one_out"] = t.leave_one_out;
    } else {
      j["instrument"] = t.instrument ? ordered_json(std::string(to_string(*t.instrument))) : ordered_json();
      if (c.command == "predict-state") j["rollout_horizon"] = t.rollout_horizon;
    }
  } else if (c.command == "spectrum") {
    j["spectrum"] = {{"resolution", c.spectrum.resolution},
                     {"bandwidth", c.spectrum.bandwidth ? ordered_json(*c.spectrum.bandwidth)
                                                        : ordered_json()}};
  } else if (c.command == "sig") {
    j["signature_level"] = t.signature_level;
  }
  return j;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state) {
  for (unsigned char ch : bytes) {
    state ^= ch;
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = fnv1a(canonical_config(config).dump());
  h = fnv1a(tool_version(), h);
  if (!config.input.empty()) {
    if (fs::is_directory(config.input)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(config.input))
        if (entry.is_regular_file()) files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        h = fnv1a(f.filename().string(), h);
        h = fnv1a(read_file(f), h);
      }
    } else {
      h = fnv1a(read_file(config.input), h);
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

/// Provenance stamped onto every file of a run.
struct Stamp {
  std::string hash;
  std::string command;

  std::vector<std::string> comment_lines() const {
    return {"mrsig " + std::string(tool_version()) + " " + command, "config_hash " + hash};
  }
  ordered_json wrap(std::string_view schema, ordered_json payload) const {
    ordered_json j;
    j["schema"] = schema;
    j["tool_version"] = tool_version();
    j["config_hash"] = hash;
    j["content"] = std::move(payload);
    return j;
  }
  std::string csv_preamble() const {
    std::string s;
    for (const auto& l : comment_lines()) s += "# " + l + "\n";
    return s;
  }
};

void write_json(const fs::path& path, const ordered_json& j) { write_file(path, j.dump(1) + "\n"); }

ordered_json model_json(const TreeEnsemble& model) {
  return ordered_json::parse(model.serialize());
}

std::string group_lower(Group g) {
  std::string s(to_string(g));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

std::string instrument_lower(Instrument i) {
  std::string s(to_string(i));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

struct RunContext {
  RunConfig config;
  Stamp stamp;
  fs::path dir;
  std::ostream& out;
  std::ostream& err;
};

RunContext open_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const std::string hash = config_hash(config);
  const fs::path dir = config.output / (config.command + "-" + hash);
  fs::create_directories(dir);
  RunContext ctx{config, {hash, config.command}, dir, out, err};
  ordered_json doc = canonical_config(config);
  doc["input"] = config.input.empty() ? std::string() : config.input.string();
  write_json(dir / "config.json", ctx.stamp.wrap("mrsig.run_config", std::move(doc)));
  return ctx;
}

Cohort load_cohort(const RunContext& ctx) {
  IngestResult ingested = ingest(ctx.config.input);
  std::string log = ctx.stamp.csv_preamble();
  log += "participants " + std::to_string(ingested.cohort.participants.size()) + "\n";
  log += "exact_duplicates_removed " + std::to_string(ingested.exact_duplicates) + "\n";
  log += "repeated_weeks_dropped " + std::to_string(ingested.repeated_weeks) + "\n";
  for (const auto& ex : ingested.excluded) {
    log += "excluded " + ex.id + ": " + ex.reason + "\n";
    ctx.err << "excluded " << ex.id << ": " << ex.reason << '\n';
  }
  write_file(ctx.dir / "ingest.log", log);
  return std::move(ingested.cohort);
}

ordered_json report_with_severity(const EvalReport& report, const SeverityReport& severity,
                                  Instrument instrument) {
  ordered_json j = report_to_json(report);
  ordered_json sev = {{"accuracy", severity.accuracy}, {"mae", severity.mae}, {"mae_unit", "bucket"}};
  if (instrument == Instrument::ASRM)
    sev["note"] = "score 17 is listed under both severe (14-17) and very severe (17-20); counted as severe";
  j["severity"] = std::move(sev);
  return j;
}

void cmd_synth(RunContext& ctx) {
  const auto& c = ctx.config;
  CohortSpec spec;
  if (c.synth.no_signal) {
    spec = no_signal_spec(c.synth.sizes, c.synth.weeks, c.task.seed);
  } else {
    spec.sizes = c.synth.sizes;
    spec.weeks = c.synth.weeks;
    spec.seed = c.task.seed;
  }
  const Cohort cohort = generate_cohort(spec);
  write_cohort_csv(cohort, ctx.dir / "cohort.csv", ctx.stamp.comment_lines());
}

void cmd_classify(RunContext& ctx) {
  const Cohort cohort = load_cohort(ctx);
  const ClassificationResult r = run_classification(cohort, ctx.config.task);
  write_json(ctx.dir / "report_mrsf.json", ctx.stamp.wrap("mrsig.eval_report", report_to_json(r.mrsf)));
  write_json(ctx.dir / "report_naive.json", ctx.stamp.wrap("mrsig.eval_report", report_to_json(r.naive)));
  if (r.mrsf_model) write_json(ctx.dir / "model_mrsf.json", ctx.stamp.wrap("mrsig.forest", model_json(*r.mrsf_model)));
  if (r.naive_model)
    write_json(ctx.dir / "model_naive.json", ctx.stamp.wrap("mrsig.forest", model_json(*r.naive_model)));

  std::string windows = ctx.stamp.csv_preamble() + "participant_id,group,window_start\n";
  std::size_t k = 0;
  for (const auto& p : cohort.participants) {
    if (std::find(ctx.config.task.groups.begin(), ctx.config.task.groups.end(), p.group) ==
        ctx.config.task.groups.end())
      continue;
    if (k >= r.window_starts.size()) break;
    windows += p.id + "," + std::string(to_string(p.group)) + "," + std::to_string(r.window_starts[k++]) + "\n";
  }
  write_file(ctx.dir / "windows.csv", windows);

  if (!r.leave_one_out.empty()) {
    std::string loo = ctx.stamp.csv_preamble() + "participant_id,group,p_bd,p_hc,p_bpd\n";
    for (const auto& p : r.leave_one_out)
      loo += p.id + "," + std::string(to_string(p.group)) + "," + shortest(p.probs[0]) + "," +
             shortest(p.probs[1]) + "," + shortest(p.probs[2]) + "\n";
    write_file(ctx.dir / "loo_probabilities.csv", loo);
  }
  ctx.out << "mrsf accuracy " << shortest(r.mrsf.classification->accuracy_bootstrap.mean)
          << ", naive accuracy " << shortest(r.naive.classification->accuracy_bootstrap.mean) << '\n';
}

std::vector<Instrument> selected_instruments(const TaskConfig& t) {
  if (t.instrument) return {*t.instrument};
  return {kInstruments.begin(), kInstruments.end()};
}

void cmd_predict_state(RunContext& ctx) {
  const Cohort cohort = load_cohort(ctx);
  const auto& t = ctx.config.task;
  const auto reports = run_state_prediction(cohort, t);
  for (const auto& r : reports) {
    const std::string stem = "state_" + group_lower(r.group) + "_" + instrument_lower(r.instrument);
    write_json(ctx.dir / (stem + "_mrsf.json"), ctx.stamp.wrap("mrsig.eval_report", report_to_json(r.mrsf)));
    write_json(ctx.dir / (stem + "_naive.json"), ctx.stamp.wrap("mrsig.eval_report", report_to_json(r.naive)));
    if (r.mrsf_model)
      write_json(ctx.dir / (stem + "_model_mrsf.json"), ctx.stamp.wrap("mrsig.forest", model_json(*r.mrsf_model)));
    if (r.naive_model)
      write_json(ctx.dir / (stem + "_model_naive.json"), ctx.stamp.wrap("mrsig.forest", model_json(*r.naive_model)));
    ctx.out << stem << " mrsf accuracy " << shortest(r.mrsf.classification->accuracy)
            << ", naive accuracy " << shortest(r.naive.classification->accuracy) << '\n';
  }

  const auto rollouts = run_rollouts(cohort, t);
  std::string csv = ctx.stamp.csv_preamble() +
                    "participant_id,group,instrument,p_no_answer,p_normal,p_elevated,status\n";
  for (const auto& e : rollouts) {
    csv += e.id + "," + std::string(to_string(e.group)) + "," + std::string(to_string(e.instrument)) + ",";
    if (e.outcome.proportions) {
      const auto& p = *e.outcome.proportions;
      csv += shortest(p[0]) + "," + shortest(p[1]) + "," + shortest(p[2]) + ",ok\n";
    } else {
      csv += ",,," + e.outcome.skip_reason + "\n";
    }
  }
  write_file(ctx.dir / "rollout.csv", csv);

  std::string truth = ctx.stamp.csv_preamble() +
                      "participant_id,group,instrument,p_no_answer,p_normal,p_elevated\n";
  for (Instrument inst : selected_instruments(t)) {
    for (const auto& p : cohort.participants) {
      if (std::find(t.groups.begin(), t.groups.end(), p.group) == t.groups.end()) continue;
      const auto q = true_proportions(p, inst);
      truth += p.id + "," + std::string(to_string(p.group)) + "," + std::string(to_string(inst)) + "," +
               shortest(q[0]) + "," + shortest(q[1]) + "," + shortest(q[2]) + "\n";
    }
  }
  write_file(ctx.dir / "true_proportions.csv", truth);
}

void cmd_predict_score(RunContext& ctx) {
  const Cohort cohort = load_cohort(ctx);
  const auto reports = run_score_prediction(cohort, ctx.config.task);
  for (const auto& r : reports) {
    const std::string stem = "score_" + group_lower(r.group) + "_" + instrument_lower(r.instrument);
    write_json(ctx.dir / (stem + "_mrsf.json"),
               ctx.stamp.wrap("mrsig.eval_report", report_with_severity(r.mrsf, r.mrsf_severity, r.instrument)));
    write_json(ctx.dir / (stem + "_naive.json"),
               ctx.stamp.wrap("mrsig.eval_report", report_with_severity(r.naive, r.naive_severity, r.instrument)));
    if (r.mrsf_model)
      write_json(ctx.dir / (stem + "_model_mrsf.json"), ctx.stamp.wrap("mrsig.forest", model_json(*r.mrsf_model)));
    if (r.naive_model)
      write_json(ctx.dir / (stem + "_model_naive.json"), ctx.stamp.wrap("mrsig.forest", model_json(*r.naive_model)));
    ctx.out << stem << " mrsf mae " << shortest(r.mrsf.regression->mae) << ", naive mae "
            << shortest(r.naive.regression->mae) << '\n';
  }
}

/// Rows of a run CSV as field lists, '#' lines and the header skipped.
std::vector<std::vector<std::string>> read_rows(const fs::path& path, std::size_t fields) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != fields)
      throw ParseError(line_no, path.filename().string() + ": expected " + std::to_string(fields) + " fields");
    rows.push_back(std::move(f));
  }
  return rows;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw InvalidArgument("bad number '" + s + "'");
  return v;
}

void cmd_spectrum(RunContext& ctx) {
  const fs::path& run = ctx.config.input;
  KdeOptions options;
  options.resolution = ctx.config.spectrum.resolution;
  options.bandwidth = ctx.config.spectrum.bandwidth;
  const auto header = ctx.stamp.comment_lines();
  std::size_t plots = 0;

  auto plot = [&](const std::vector<SimplexPoint>& points, const std::string& stem, const PlotLabels& labels) {
    if (points.size() < 2) {
      ctx.err << "skipped " << stem << ": " << points.size() << " point(s), need 2\n";
      return;
    }
    emit_plot(kde2d(points, options), points, ctx.dir / stem, labels, header);
    ctx.out << "wrote " << (ctx.dir / (stem + ".svg")).string() << '\n';
    ++plots;
  };

  if (fs::exists(run / "loo_probabilities.csv")) {
    std::map<Group, std::vector<SimplexPoint>> by_group;
    for (const auto& row : read_rows(run / "loo_probabilities.csv", 5))
      by_group[group_from(row[1])].push_back(
          simplex_project({to_double(row[2]), to_double(row[3]), to_double(row[4])}));
    for (Group g : kGroups) {
      PlotLabels labels{std::string(to_string(g)) + " participants", {"BD", "HC", "BPD"}};
      plot(by_group[g], "spectrum_" + group_lower(g), labels);
    }
  }

  auto state_plots = [&](const fs::path& file, std::size_t fields, const std::string& prefix) {
    std::map<std::pair<Group, Instrument>, std::vector<SimplexPoint>> sets;
    for (const auto& row : read_rows(file, fields)) {
      if (row[3].empty()) continue;  // skipped rollout
      sets[{group_from(row[1]), instrument_from(row[2])}].push_back(
          simplex_project({to_double(row[3]), to_double(row[4]), to_double(row[5])}));
    }
    for (const auto& [key, points] : sets) {
      const auto names = state_class_names(key.second);
      PlotLabels labels{std::string(to_string(key.first)) + " " + std::string(to_string(key.second)) +
                            " " + prefix + " state proportions",
                        {names[0], names[1], names[2]}};
      plot(points, prefix + "_" + group_lower(key.first) + "_" + instrument_lower(key.second), labels);
    }
  };
  if (fs::exists(run / "rollout.csv")) state_plots(run / "rollout.csv", 7, "rollout");
  if (fs::exists(run / "true_proportions.csv")) state_plots(run / "true_proportions.csv", 6, "true");

  if (plots == 0)
    throw InsufficientData("no plottable inputs in " + run.string() +
                           " (expected loo_probabilities.csv, rollout.csv or true_proportions.csv)");
}

void cmd_sig(const RunConfig& c, std::ostream& out) {
  std::istringstream in(read_file(c.input));
  Matrix points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (points.rows() == 0 && line_no == 1) continue;  // header
      throw ParseError(line_no, "non-numeric field in points file");
    }
    if (points.rows() > 0 && row.size() != points.cols())
      throw ParseError(line_no, "row has " + std::to_string(row.size()) + " values, expected " +
                                    std::to_string(points.cols()));
    points.append_row(row);
  }
  const auto sig = stream_signature(points, c.task.signature_level);
  const auto flat = sig.flatten_without_constant();
  for (std::size_t i = 0; i < flat.size(); ++i) out << (i ? "," : "") << shortest(flat[i]);
  out << '\n';
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> v;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t x = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
    if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
      throw InvalidArgument("--sizes expects three integers like 49,45,32");
    v.push_back(x);
  }
  if (v.size() != 3) throw InvalidArgument("--sizes expects three integers like 49,45,32");
  return v;
}

/// Command-line values; unset ones leave the config untouched.
struct Overrides {
  std::string config_file;
  std::optional<std::string> input, output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> window, level, resamples, horizon, trees, max_depth, min_leaf, mtry;
  std::optional<double> split;
  std::optional<std::string> instrument, groups, sizes;
  std::optional<std::size_t> weeks, resolution;
  std::optional<double> bandwidth;
  bool no_signal = false;
  bool no_loo = false;
};

void apply_overrides(const Overrides& o, RunConfig& c) {
  auto& t = c.task;
  if (o.input) c.input = *o.input;
  if (o.output) c.output = *o.output;
  if (o.seed) t.seed = *o.seed;
  if (o.window) t.window_length = *o.window;
  if (o.level) t.signature_level = *o.level;
  if (o.resamples) t.bootstrap_resamples = *o.resamples;
  if (o.horizon) t.rollout_horizon = *o.horizon;
  if (o.trees) t.forest.n_trees = *o.trees;
  if (o.max_depth) t.forest.max_depth = *o.max_depth;
  if (o.min_leaf) t.forest.min_leaf_size = *o.min_leaf;
  if (o.mtry) t.forest.features_per_split = *o.mtry;
  if (o.split) t.split_fraction = *o.split;
  if (o.instrument) {
    if (*o.instrument == "both") t.instrument.reset();
    else t.instrument = instrument_from(*o.instrument);
  }
  if (o.groups) {
    t.groups.clear();
    std::stringstream ss(*o.groups);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.groups.push_back(group_from(cell));
  }
  if (o.sizes) {
    const auto v = parse_sizes(*o.sizes);
    c.synth.sizes = {v[0], v[1], v[2]};
  }
  if (o.weeks) c.synth.weeks = *o.weeks;
  if (o.no_signal) c.synth.no_signal = true;
  if (o.no_loo) t.leave_one_out = false;
  if (o.resolution) c.spectrum.resolution = *o.resolution;
  if (o.bandwidth) c.spectrum.bandwidth = *o.bandwidth;
}

TaskKind task_kind(std::string_view command) {
  if (command == "predict-state") return TaskKind::StatePredict;
  if (command == "predict-score") return TaskKind::ScorePredict;
  return TaskKind::Classify;
}

void validate(RunConfig& c) {
  if (c.input.empty()) throw InvalidArgument(c.command + ": an input path is required (--input)");
  if (!fs::exists(c.input)) throw IoError("input not found: " + c.input.string());
  c.input = fs::canonical(c.input);
  if (c.command == "spectrum" && !fs::is_directory(c.input))
    throw InvalidArgument("spectrum: --input must be a classify or predict-state run directory");
  if (c.command != "sig") {
    if (c.output.empty()) c.output = ".";
    c.output = fs::absolute(c.output).lexically_normal();
  }
  if (c.command == "spectrum") {
    if (c.spectrum.resolution < 2) throw InvalidArgument("spectrum.resolution must be at least 2");
    if (c.spectrum.bandwidth && !(*c.spectrum.bandwidth > 0.0))
      throw InvalidArgument("spectrum.bandwidth must be positive");
  }
  if (is_task(c.command)) c.task.validate();
  if (c.command == "sig" && c.task.signature_level < 1)
    throw InvalidArgument("signature_level must be at least 1");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Missing-response signature features for longitudinal mood data", "mrsig"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config_file, "JSON config file");
    sub->add_option("-o,--out", o.output, "Parent directory for the run directory");
  };
  auto add_task = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("-i,--input", o.input, "Cohort CSV");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--window", o.window, "Window length in weeks");
    sub->add_option("--level", o.level, "Signature truncation level");
    sub->add_option("--split", o.split, "Training fraction");
    sub->add_option("--groups", o.groups, "Comma list of groups, e.g. BD,HC,BPD");
    sub->add_option("--trees", o.trees, "Trees per forest");
    sub->add_option("--max-depth", o.max_depth, "Maximum tree depth, 0 for unlimited");
    sub->add_option("--min-leaf", o.min_leaf, "Minimum samples per leaf");
    sub->add_option("--mtry", o.mtry, "Features tried per split, 0 for ceil(sqrt(f))");
    sub->add_option("--resamples", o.resamples, "Bootstrap resamples");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort CSV");
  add_common(synth);
  synth->add_option("--seed", o.seed, "Master seed");
  synth->add_option("--sizes", o.sizes, "Group sizes BD,HC,BPD");
  synth->add_option("--weeks", o.weeks, "Weeks per participant");
  synth->add_flag("--no-signal", o.no_signal, "Give every group the same generator");

  auto* classify = app.add_subcommand("classify", "Diagnostic group classification");
  add_task(classify);
  classify->add_flag("--no-loo", o.no_loo, "Skip leave-one-out probabilities");

  auto* state = app.add_subcommand("predict-state", "Next-week state prediction and rollouts");
  add_task(state);
  state->add_option("--instrument", o.instrument, "ASRM, QIDS or both");
  state->add_option("--horizon", o.horizon, "Rollout weeks per participant");

  auto* score = app.add_subcommand("predict-score", "Next-week score prediction");
  add_task(score);
  score->add_option("--instrument", o.instrument, "ASRM, QIDS or both");

  auto* spectrum = app.add_subcommand("spectrum", "Simplex density plots from a run directory");
  add_common(spectrum);
  spectrum->add_option("-i,--input", o.input, "classify or predict-state run directory");
  spectrum->add_option("--resolution", o.resolution, "Grid cells per side");
  spectrum->add_option("--bandwidth", o.bandwidth, "Isotropic kernel sd (default: Scott's rule)");

  auto* sig = app.add_subcommand("sig", "Print the truncated signature of a CSV of points");
  sig->add_option("-i,--input", o.input, "CSV with one point per row")->required();
  sig->add_option("--level", o.level, "Truncation level");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunConfig config;
    config.command = app.get_subcommands().front()->get_name();
    config.task = TaskConfig::defaults_for(task_kind(config.command));
    if (config.command == "sig") config.task.signature_level = 2;
    if (!o.config_file.empty()) {
      json doc;
      try {
        doc = json::parse(read_file(o.config_file));
      } catch (const json::parse_error& e) {
        throw InvalidArgument("config " + o.config_file + ": " + e.what());
      }
      apply_config(doc, config);
      // Relative paths in a config file are relative to the file itself.
      const fs::path base = fs::path(o.config_file).parent_path();
      if (!config.input.empty() && config.input.is_relative()) config.input = base / config.input;
      if (!config.output.empty() && config.output.is_relative()) config.output = base / config.output;
    }
    apply_overrides(o, config);

    if (config.command == "synth") {
      config.input.clear();  // a shared config file may name the cohort synth is about to write
      if (config.output.empty()) config.output = ".";
      config.output = fs::absolute(config.output).lexically_normal();
      RunContext ctx = open_run(config, out, err);
      cmd_synth(ctx);
      out << (ctx.dir / "cohort.csv").string() << '\n';
      return 0;
    }
    validate(config);
    if (config.command == "sig") {
      cmd_sig(config, out);
      return 0;
    }
    RunContext ctx = open_run(config, out, err);
    if (config.command == "classify") cmd_classify(ctx);
    else if (config.command == "predict-state") cmd_predict_state(ctx);
    else if (config.command == "predict-score") cmd_predict_score(ctx);
    else if (config.command == "spectrum") cmd_spectrum(ctx);
    out << ctx.dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "mrsig: error: " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mrsig::cli
