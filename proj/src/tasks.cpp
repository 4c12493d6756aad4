#include "mrsig/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mrsig/encode.hpp"
#include "mrsig/errors.hpp"
#include "mrsig/random.hpp"
#include "mrsig/sigcore.hpp"

namespace mrsig {

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::Classify: return "classify";
    case TaskKind::StatePredict: return "predict-state";
    case TaskKind::ScorePredict: return "predict-score";
  }
  return "?";
}

StateLabel state_label(std::optional<int> score, Instrument instrument) {
  if (!score) return StateLabel::NoAnswer;
  const int max = instrument_max(instrument);
  if (*score < 0 || *score > max)
    throw InvalidArgument(std::string(to_string(instrument)) + " score " + std::to_string(*score) +
                          " outside 0.." + std::to_string(max));
  const int threshold = instrument == Instrument::ASRM ? 5 : 10;
  return *score > threshold ? StateLabel::Elevated : StateLabel::Normal;
}

std::vector<std::string> state_class_names(Instrument instrument) {
  return {"no_answer", "normal", instrument == Instrument::ASRM ? "manic" : "depressed"};
}

Severity severity_bucket(int score, Instrument instrument) {
  const int max = instrument_max(instrument);
  if (score < 0 || score > max)
    throw InvalidArgument(std::string(to_string(instrument)) + " score " + std::to_string(score) +
                          " outside 0.." + std::to_string(max));
  // Upper bounds of none, mild, moderate, severe.
  static constexpr std::array<int, 4> kQids{5, 10, 15, 20};
  static constexpr std::array<int, 4> kAsrm{5, 9, 13, 17};
  const auto& bounds = instrument == Instrument::ASRM ? kAsrm : kQids;
  for (std::size_t b = 0; b < bounds.size(); ++b)
    if (score <= bounds[b]) return static_cast<Severity>(b);
  return Severity::VerySevere;
}

std::vector<double> window_features(std::span<const WeeklyObservation> window, FeatureMap map,
                                    std::size_t signature_level) {
  if (map == FeatureMap::Mrsf) return mrsf(window, signature_level);
  const auto naive = naive_features(window);
  return {naive.begin(), naive.end()};
}

TaskConfig TaskConfig::defaults_for(TaskKind task) {
  TaskConfig c;
  c.task = task;
  c.window_length = task == TaskKind::Classify ? 20 : 10;
  return c;
}

void TaskConfig::validate() const {
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw InvalidArgument("split_fraction must lie in (0, 1)");
  if (window_length < 2) throw InvalidArgument("window_length must be at least 2");
  if (signature_level < 1) throw InvalidArgument("signature_level must be at least 1");
  if (bootstrap_resamples < 1) throw InvalidArgument("bootstrap_resamples must be at least 1");
  if (rollout_horizon < 1) throw InvalidArgument("rollout_horizon must be at least 1");
  if (forest.n_trees < 1) throw InvalidArgument("forest.n_trees must be at least 1");
  if (groups.empty()) throw InvalidArgument("group filter is empty");
}

RunSeeds RunSeeds::from(std::uint64_t master) {
  return {derive_seed(master, 1), derive_seed(master, 2), derive_seed(master, 3),
          derive_seed(master, 4)};
}

namespace {

bool group_selected(const TaskConfig& config, Group g) {
  return std::find(config.groups.begin(), config.groups.end(), g) != config.groups.end();
}

std::vector<Instrument> selected_instruments(const TaskConfig& config) {
  if (config.instrument) return {*config.instrument};
  return {kInstruments.begin(), kInstruments.end()};
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

std::size_t train_count(std::size_t n, double fraction) {
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Positions 0..strata.size()-1 split per stratum; both sides keep cohort order.
Split stratified_split(std::span<const int> strata, double fraction, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<char> in_train(strata.size(), 0);
  const int n_strata = strata.empty() ? 0 : *std::max_element(strata.begin(), strata.end()) + 1;
  for (int s = 0; s < n_strata; ++s) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < strata.size(); ++i)
      if (strata[i] == s) members.push_back(i);
    if (members.empty()) continue;
    if (members.size() < 2)
      throw InsufficientData("stratum " + std::to_string(s) + " has fewer than 2 members");
    shuffle(members, rng);
    const std::size_t k = train_count(members.size(), fraction);
    for (std::size_t i = 0; i < k; ++i) in_train[members[i]] = 1;
  }
  Split out;
  for (std::size_t i = 0; i < strata.size(); ++i) (in_train[i] ? out.train : out.test).push_back(i);
  return out;
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out;
  for (std::size_t r : rows) out.append_row(m.row(r));
  return out;
}

template <class T>
std::vector<T> select(std::span<const T> v, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

std::span<const WeeklyObservation> window_at(const ParticipantRecord& p, std::size_t start,
                                             std::size_t length) {
  return std::span<const WeeklyObservation>(p.weeks).subspan(start, length);
}

// Features for both maps over a list of windows.
struct FeatureSet {
  Matrix mrsf;
  Matrix naive;
};

FeatureSet features_for(const Cohort& cohort, std::span<const PredictionInstance> instances,
                        std::size_t length, std::size_t level) {
  FeatureSet fs;
  for (const auto& inst : instances) {
    const auto w = window_at(cohort.participants[inst.participant], inst.start, length);
    fs.mrsf.append_row(window_features(w, FeatureMap::Mrsf, level));
    fs.naive.append_row(window_features(w, FeatureMap::Naive, level));
  }
  return fs;
}

std::uint64_t group_seed(std::uint64_t base, Group g, std::size_t salt = 0) {
  return derive_seed(base, static_cast<std::uint64_t>(g) * 16 + salt);
}

std::vector<std::size_t> eligible_members(const Cohort& cohort, Group g, std::size_t min_weeks) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cohort.participants.size(); ++i) {
    const auto& p = cohort.participants[i];
    if (p.group == g && p.weeks.size() >= min_weeks) out.push_back(i);
  }
  return out;
}

std::vector<PredictionInstance> instances_of(const Cohort& cohort,
                                             std::span<const std::size_t> participants,
                                             std::size_t length) {
  std::vector<PredictionInstance> out;
  for (std::size_t p : participants) {
    auto more = sliding_instances(cohort, p, length);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

std::optional<int> target_score(const Cohort& cohort, const PredictionInstance& inst,
                                std::size_t length, Instrument instrument) {
  return cohort.participants[inst.participant].weeks[inst.start + length].score(instrument);
}

Matrix predict_proba_rows(const TreeEnsemble& model, const Matrix& x) {
  Matrix out;
  for (std::size_t r = 0; r < x.rows(); ++r) out.append_row(model.predict_proba(x.row(r)));
  return out;
}

// Participant-level split within one group for the prediction tasks.
Split split_members(std::span<const std::size_t> members, double fraction, std::uint64_t seed) {
  const std::vector<int> strata(members.size(), 0);
  Split positions = stratified_split(strata, fraction, seed);
  Split out;
  for (std::size_t i : positions.train) out.train.push_back(members[i]);
  for (std::size_t i : positions.test) out.test.push_back(members[i]);
  return out;
}

}  // namespace

ClassificationResult run_classification(const Cohort& cohort, const TaskConfig& config) {
  config.validate();
  const RunSeeds seeds = RunSeeds::from(config.seed);

  std::vector<std::size_t> included;
  for (std::size_t i = 0; i < cohort.participants.size(); ++i)
    if (group_selected(config, cohort.participants[i].group)) included.push_back(i);
  for (Group g : config.groups) {
    const auto n = std::count_if(included.begin(), included.end(), [&](std::size_t i) {
      return cohort.participants[i].group == g;
    });
    if (n < 2)
      throw InsufficientData("group " + std::string(to_string(g)) + " has " + std::to_string(n) +
                             " eligible participants, need at least 2");
  }

  ClassificationResult result;
  Rng window_rng(seeds.windows);
  std::vector<PredictionInstance> windows;
  std::vector<int> labels;
  for (std::size_t i : included) {
    const auto& p = cohort.participants[i];
    const std::size_t start = draw_window_start(p.weeks.size(), config.window_length, window_rng);
    result.window_starts.push_back(start);
    windows.push_back({i, start});
    labels.push_back(static_cast<int>(p.group));
  }
  const FeatureSet fs = features_for(cohort, windows, config.window_length, config.signature_level);
  const Split split = stratified_split(labels, config.split_fraction, seeds.split);
  const auto y_train = select<int>(labels, split.train);
  const auto y_test = select<int>(labels, split.test);
  const std::vector<std::string> names{"BD", "HC", "BPD"};

  auto train_and_eval = [&](const Matrix& x, const char* name, std::optional<TreeEnsemble>& model) {
    model = TreeEnsemble::fit_classifier(select_rows(x, split.train), y_train, 3, config.forest,
                                         seeds.forest);
    const Matrix probs = predict_proba_rows(*model, select_rows(x, split.test));
    return evaluate_classifier(name, y_test, probs, names, config.bootstrap_resamples,
                               seeds.bootstrap);
  };
  result.mrsf = train_and_eval(fs.mrsf, "mrsf", result.mrsf_model);
  result.naive = train_and_eval(fs.naive, "naive", result.naive_model);

  if (config.leave_one_out) {
    const std::size_t n = included.size();
    result.leave_one_out.resize(n);
    for (std::size_t held = 0; held < n; ++held) {
      std::vector<std::size_t> rest;
      rest.reserve(n - 1);
      for (std::size_t j = 0; j < n; ++j)
        if (j != held) rest.push_back(j);
      const auto model = TreeEnsemble::fit_classifier(
          select_rows(fs.mrsf, rest), select<int>(labels, rest), 3, config.forest, seeds.forest);
      const auto probs = model.predict_proba(fs.mrsf.row(held));
      const auto& p = cohort.participants[included[held]];
      result.leave_one_out[held] = {p.id, p.group, {probs[0], probs[1], probs[2]}};
    }
  }
  return result;
}

std::vector<PredictionInstance> sliding_instances(const Cohort& cohort, std::size_t participant,
                                                  std::size_t length) {
  const std::size_t weeks = cohort.participants.at(participant).weeks.size();
  std::vector<PredictionInstance> out;
  for (std::size_t s = 0; s + length < weeks; ++s) out.push_back({participant, s});
  return out;
}

std::vector<StateReports> run_state_prediction(const Cohort& cohort, const TaskConfig& config) {
  config.validate();
  const RunSeeds seeds = RunSeeds::from(config.seed);
  const std::size_t length = config.window_length;
  std::vector<StateReports> out;
  for (Group g : config.groups) {
    const auto members = eligible_members(cohort, g, length + 1);
    if (members.size() < 2)
      throw InsufficientData("group " + std::string(to_string(g)) + " has " +
                             std::to_string(members.size()) + " participants with at least " +
                             std::to_string(length + 1) + " weeks, need 2");
    const Split split = split_members(members, config.split_fraction, group_seed(seeds.split, g));
    const auto train = instances_of(cohort, split.train, length);
    const auto test = instances_of(cohort, split.test, length);
    const FeatureSet train_fs = features_for(cohort, train, length, config.signature_level);
    const FeatureSet test_fs = features_for(cohort, test, length, config.signature_level);

    for (Instrument inst : selected_instruments(config)) {
      auto labels_of = [&](std::span<const PredictionInstance> xs) {
        std::vector<int> y;
        for (const auto& x : xs)
          y.push_back(static_cast<int>(state_label(target_score(cohort, x, length, inst), inst)));
        return y;
      };
      const auto y_train = labels_of(train);
      const auto y_test = labels_of(test);
      const std::uint64_t forest_seed = group_seed(seeds.forest, g, 1 + static_cast<std::size_t>(inst));
      const std::uint64_t boot_seed = group_seed(seeds.bootstrap, g, 1 + static_cast<std::size_t>(inst));
      StateReports rep{g, inst, {}, {}, {}, {}};
      auto fit_eval = [&](const Matrix& xtr, const Matrix& xte, const char* name,
                          std::optional<TreeEnsemble>& model) {
        model = TreeEnsemble::fit_classifier(xtr, y_train, 3, config.forest, forest_seed);
        return evaluate_classifier(name, y_test, predict_proba_rows(*model, xte),
                                   state_class_names(inst), config.bootstrap_resamples, boot_seed);
      };
      rep.mrsf = fit_eval(train_fs.mrsf, test_fs.mrsf, "mrsf", rep.mrsf_model);
      rep.naive = fit_eval(train_fs.naive, test_fs.naive, "naive", rep.naive_model);
      out.push_back(std::move(rep));
    }
  }
  return out;
}

SeverityReport severity_report(std::span<const double> y_true, std::span<const double> y_pred,
                               Instrument instrument) {
  if (y_true.size() != y_pred.size()) throw InvalidArgument("severity_report: length mismatch");
  if (y_true.empty()) throw InvalidArgument("severity_report: empty input");
  const double max = instrument_max(instrument);
  auto bucket = [&](double score) {
    const int s = static_cast<int>(std::llround(std::clamp(score, 0.0, max)));
    return static_cast<int>(severity_bucket(s, instrument));
  };
  std::size_t hit = 0;
  double err = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int a = bucket(y_true[i]);
    const int b = bucket(y_pred[i]);
    hit += a == b;
    err += std::abs(a - b);
  }
  const double n = static_cast<double>(y_true.size());
  return {static_cast<double>(hit) / n, err / n};
}

std::vector<ScoreReports> run_score_prediction(const Cohort& cohort, const TaskConfig& config) {
  config.validate();
  const RunSeeds seeds = RunSeeds::from(config.seed);
  const std::size_t length = config.window_length;
  std::vector<ScoreReports> out;
  for (Group g : config.groups) {
    const auto members = eligible_members(cohort, g, length + 1);
    if (members.size() < 2)
      throw InsufficientData("group " + std::string(to_string(g)) + " has " +
                             std::to_string(members.size()) + " participants with at least " +
                             std::to_string(length + 1) + " weeks, need 2");
    const Split split = split_members(members, config.split_fraction, group_seed(seeds.split, g));
    // Only instances whose target week was answered; pairing makes this the same set
    // for both instruments.
    auto answered = [&](std::span<const std::size_t> ps) {
      auto all = instances_of(cohort, ps, length);
      std::erase_if(all, [&](const PredictionInstance& x) {
        return !target_score(cohort, x, length, Instrument::ASRM).has_value();
      });
      return all;
    };
    const auto train = answered(split.train);
    const auto test = answered(split.test);
    if (train.size() < 2 || test.empty())
      throw InsufficientData("group " + std::string(to_string(g)) +
                             " has too few answered target weeks for score prediction");
    const FeatureSet train_fs = features_for(cohort, train, length, config.signature_level);
    const FeatureSet test_fs = features_for(cohort, test, length, config.signature_level);

    for (Instrument inst : selected_instruments(config)) {
      auto targets_of = [&](std::span<const PredictionInstance> xs) {
        std::vector<double> y;
        for (const auto& x : xs) y.push_back(*target_score(cohort, x, length, inst));
        return y;
      };
      const auto y_train = targets_of(train);
      const auto y_test = targets_of(test);
      const double max = instrument_max(inst);
      const std::uint64_t forest_seed = group_seed(seeds.forest, g, 1 + static_cast<std::size_t>(inst));
      const std::uint64_t boot_seed = group_seed(seeds.bootstrap, g, 1 + static_cast<std::size_t>(inst));
      ScoreReports rep{g, inst, {}, {}, {}, {}, {}, {}};
      auto fit_eval = [&](const Matrix& xtr, const Matrix& xte, const char* name,
                          std::optional<TreeEnsemble>& model, SeverityReport& severity) {
        model = TreeEnsemble::fit_regressor(xtr, y_train, config.forest, forest_seed);
        std::vector<double> pred(xte.rows());
        for (std::size_t r = 0; r < xte.rows(); ++r)
          pred[r] = std::clamp(model->predict_value(xte.row(r)), 0.0, max);
        severity = severity_report(y_test, pred, inst);
        return evaluate_regressor(name, y_test, pred, config.bootstrap_resamples, boot_seed);
      };
      rep.mrsf = fit_eval(train_fs.mrsf, test_fs.mrsf, "mrsf", rep.mrsf_model, rep.mrsf_severity);
      rep.naive =
          fit_eval(train_fs.naive, test_fs.naive, "naive", rep.naive_model, rep.naive_severity);
      out.push_back(std::move(rep));
    }
  }
  return out;
}

std::size_t prediction_bucket_count(std::size_t weeks, std::size_t window_length) {
  return weeks > window_length ? weeks - window_length : 0;
}

bool rollout_eligible(std::size_t weeks, std::size_t window_length, std::size_t horizon) {
  return prediction_bucket_count(weeks, window_length) > horizon;
}

RolloutOutcome rollout_states(const ParticipantRecord& participant, const TreeEnsemble& group_model,
                              std::size_t window_length, std::size_t signature_level,
                              std::size_t horizon) {
  const std::size_t weeks = participant.weeks.size();
  if (!rollout_eligible(weeks, window_length, horizon))
    return {std::nullopt, std::to_string(prediction_bucket_count(weeks, window_length)) +
                              " prediction windows, need more than " + std::to_string(horizon)};
  const FeatureMap map = group_model.feature_count() == 2 ? FeatureMap::Naive : FeatureMap::Mrsf;
  std::array<double, 3> counts{0.0, 0.0, 0.0};
  for (std::size_t target = weeks - horizon; target < weeks; ++target) {
    const auto window = window_at(participant, target - window_length, window_length);
    ++counts[static_cast<std::size_t>(
        group_model.predict_class(window_features(window, map, signature_level)))];
  }
  for (double& c : counts) c /= static_cast<double>(horizon);
  return {counts, {}};
}

std::vector<RolloutEntry> run_rollouts(const Cohort& cohort, const TaskConfig& config) {
  config.validate();
  const RunSeeds seeds = RunSeeds::from(config.seed);
  const std::size_t length = config.window_length;
  const std::size_t horizon = config.rollout_horizon;
  std::vector<RolloutEntry> out;
  for (Group g : config.groups) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < cohort.participants.size(); ++i)
      if (cohort.participants[i].group == g) members.push_back(i);
    // MRSF rows of every member's windows, computed once per group.
    std::vector<std::vector<PredictionInstance>> windows(members.size());
    std::vector<Matrix> feats(members.size());
    for (std::size_t m = 0; m < members.size(); ++m) {
      windows[m] = sliding_instances(cohort, members[m], length);
      for (const auto& w : windows[m])
        feats[m].append_row(window_features(
            window_at(cohort.participants[members[m]], w.start, length), FeatureMap::Mrsf,
            config.signature_level));
    }
    for (Instrument inst : selected_instruments(config)) {
      const std::uint64_t forest_seed =
          group_seed(seeds.forest, g, 8 + static_cast<std::size_t>(inst));
      for (std::size_t m = 0; m < members.size(); ++m) {
        const auto& p = cohort.participants[members[m]];
        RolloutEntry entry{p.id, g, inst, {}};
        if (!rollout_eligible(p.weeks.size(), length, horizon)) {
          entry.outcome.skip_reason =
              std::to_string(prediction_bucket_count(p.weeks.size(), length)) +
              " prediction windows, need more than " + std::to_string(horizon);
          out.push_back(std::move(entry));
          continue;
        }
        Matrix x;
        std::vector<int> y;
        for (std::size_t o = 0; o < members.size(); ++o) {
          if (o == m) continue;
          for (std::size_t r = 0; r < windows[o].size(); ++r) {
            x.append_row(feats[o].row(r));
            y.push_back(static_cast<int>(
                state_label(target_score(cohort, windows[o][r], length, inst), inst)));
          }
        }
        if (x.rows() < 2) {
          entry.outcome.skip_reason = "no training windows from other group members";
          out.push_back(std::move(entry));
          continue;
        }
        const auto model =
            TreeEnsemble::fit_classifier(x, y, 3, config.forest, derive_seed(forest_seed, m));
        entry.outcome = rollout_states(p, model, length, config.signature_level, horizon);
        out.push_back(std::move(entry));
      }
    }
  }
  return out;
}

}  // namespace mrsig
