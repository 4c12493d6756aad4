#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrsig/cohort.hpp"
#include "mrsig/eval.hpp"
#include "mrsig/forest.hpp"

namespace mrsig {

enum class TaskKind { Classify, StatePredict, ScorePredict };

std::string_view to_string(TaskKind k);

/// Next-week state. Elevated means manic for ASRM and depressed for QIDS.
enum class StateLabel { NoAnswer = 0, Normal = 1, Elevated = 2 };

/// Missing -> NoAnswer; ASRM > 5 or QIDS > 10 -> Elevated; otherwise Normal.
StateLabel state_label(std::optional<int> score, Instrument instrument);

/// "no_answer", "normal", then "manic" (ASRM) or "depressed" (QIDS).
std::vector<std::string> state_class_names(Instrument instrument);

enum class Severity { None0 = 0, Mild = 1, Moderate = 2, Severe = 3, VerySevere = 4 };

/// QIDS: 0-5 none, 6-10 mild, 11-15 moderate, 16-20 severe, 21-27 very severe.
/// ASRM: 0-5 none, 6-9 mild, 10-13 moderate, 14-17 severe, 18-20 very severe.
Severity severity_bucket(int score, Instrument instrument);

/// Which features a model sees for a window.
enum class FeatureMap { Mrsf, Naive };

std::vector<double> window_features(std::span<const WeeklyObservation> window, FeatureMap map,
                                    std::size_t signature_level);

struct TaskConfig {
  TaskKind task = TaskKind::Classify;
  std::size_t window_length = 20;
  std::size_t signature_level = 2;
  double split_fraction = 0.7;
  /// Prediction tasks only; nullopt runs both instruments.
  std::optional<Instrument> instrument;
  std::vector<Group> groups{Group::BD, Group::HC, Group::BPD};
  std::uint64_t seed = 0;
  ForestParams forest;
  std::size_t bootstrap_resamples = 1000;
  /// Weeks predicted per participant in the rollout.
  std::size_t rollout_horizon = 5;
  /// Classification: also compute leave-one-out probability vectors.
  bool leave_one_out = true;

  /// Defaults for a task: 20-week windows for classification, 10 for predictions.
  static TaskConfig defaults_for(TaskKind task);
  void validate() const;
};

/// Seeds for the independent random streams of a run. MRSF and naive pipelines share them.
struct RunSeeds {
  std::uint64_t windows, split, forest, bootstrap;
  static RunSeeds from(std::uint64_t master);
};

struct ParticipantProbability {
  std::string id;
  Group group;
  std::array<double, 3> probs;  // BD, HC, BPD
};

struct ClassificationResult {
  EvalReport mrsf;
  EvalReport naive;
  std::optional<TreeEnsemble> mrsf_model;
  std::optional<TreeEnsemble> naive_model;
  std::vector<std::size_t> window_starts;  // one per included participant, cohort order
  std::vector<ParticipantProbability> leave_one_out;
};

/// Diagnostic-group classification on one randomly drawn window per participant,
/// stratified split, MRSF and naive forests on identical draws.
ClassificationResult run_classification(const Cohort& cohort, const TaskConfig& config);

/// A window and the week right after it.
struct PredictionInstance {
  std::size_t participant;  // index into the cohort
  std::size_t start;        // first week of the window
};

/// All sliding windows of `length` weeks that have a following week.
std::vector<PredictionInstance> sliding_instances(const Cohort& cohort, std::size_t participant,
                                                  std::size_t length);

struct StateReports {
  Group group;
  Instrument instrument;
  EvalReport mrsf;
  EvalReport naive;
  std::optional<TreeEnsemble> mrsf_model;
  std::optional<TreeEnsemble> naive_model;
};

/// Per group and instrument: 3-class next-week state forests on MRSF vs naive features.
std::vector<StateReports> run_state_prediction(const Cohort& cohort, const TaskConfig& config);

struct SeverityReport {
  double accuracy = 0.0;
  double mae = 0.0;  // in bucket indices
};

SeverityReport severity_report(std::span<const double> y_true, std::span<const double> y_pred,
                               Instrument instrument);

struct ScoreReports {
  Group group;
  Instrument instrument;
  EvalReport mrsf;
  EvalReport naive;
  SeverityReport mrsf_severity;
  SeverityReport naive_severity;
  std::optional<TreeEnsemble> mrsf_model;
  std::optional<TreeEnsemble> naive_model;
};

/// Per group and instrument: next-week raw score regressors on instances whose target
/// week was answered. Predictions are clipped to the instrument range.
std::vector<ScoreReports> run_score_prediction(const Cohort& cohort, const TaskConfig& config);

/// Number of (window, next week) pairs a record of `weeks` weeks provides.
std::size_t prediction_bucket_count(std::size_t weeks, std::size_t window_length);

/// Rollout needs more than `horizon` buckets; records with at most that many are excluded.
bool rollout_eligible(std::size_t weeks, std::size_t window_length, std::size_t horizon);

struct RolloutOutcome {
  std::optional<std::array<double, 3>> proportions;  // NoAnswer, Normal, Elevated
  std::string skip_reason;
};

/// Predicts the states of the final `horizon` weeks from the sliding windows just before
/// each of them, and returns how often each state was predicted.
RolloutOutcome rollout_states(const ParticipantRecord& participant, const TreeEnsemble& group_model,
                              std::size_t window_length, std::size_t signature_level,
                              std::size_t horizon = 5);

struct RolloutEntry {
  std::string id;
  Group group;
  Instrument instrument;
  RolloutOutcome outcome;
};

/// For every participant, a state model trained on the other participants of the same
/// group (MRSF features), then rollout_states on the held-out participant.
std::vector<RolloutEntry> run_rollouts(const Cohort& cohort, const TaskConfig& config);

}  // namespace mrsig
