#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "mrsig/cohort.hpp"

namespace mrsig {

/// Latent mood state driving one synthetic participant.
enum class MoodState { Euthymic = 0, Manic = 1, Depressed = 2 };

/// Normal emission, rounded and clipped to the instrument range.
struct ScoreEmission {
  double asrm_mean = 0.0;
  double asrm_sd = 1.0;
  double qids_mean = 0.0;
  double qids_sd = 1.0;
};

struct MissingnessModel {
  /// Weekly miss probability for an euthymic week after an answered week.
  double base_probability = 0.0;
  /// Multiplies base_probability by current latent state (euthymic, manic, depressed).
  std::array<double, 3> state_multiplier{1.0, 1.0, 1.0};
  /// Miss probability right after a missed week; negative disables the dependence.
  double repeat_probability = -1.0;
  /// Log-normal spread of a per-participant propensity multiplier (0 = homogeneous).
  double propensity_spread = 0.0;
};

struct GroupGenerator {
  Group group = Group::HC;
  std::array<double, 3> initial{1.0, 0.0, 0.0};
  /// Row-stochastic transition matrix over MoodState.
  std::array<std::array<double, 3>, 3> transition{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  std::array<ScoreEmission, 3> emission{};
  /// Per-participant baseline shifts, N(0, sd), added to every emitted mean.
  double asrm_offset_sd = 0.0;
  double qids_offset_sd = 0.0;
  MissingnessModel missingness;

  /// Throws InvalidArgument when rows do not sum to 1 or probabilities leave [0, 1].
  void validate() const;
};

/// Default dynamics: HC near-absorbing euthymia and rare misses, BD episodic,
/// BPD fast switching with the most (and state-dependent) missingness.
GroupGenerator default_generator(Group group);

struct CohortSpec {
  std::array<std::size_t, 3> sizes{49, 45, 32};  // BD, HC, BPD
  std::size_t weeks = 51;
  std::uint64_t seed = 0;
  std::array<GroupGenerator, 3> generators{default_generator(Group::BD),
                                           default_generator(Group::HC),
                                           default_generator(Group::BPD)};
};

/// Every group uses the same dynamics and missingness, so labels carry no signal.
CohortSpec no_signal_spec(std::array<std::size_t, 3> sizes, std::size_t weeks, std::uint64_t seed);

/// Deterministic in spec.seed. Participants are ordered BD, HC, BPD with ids like "BD-001".
Cohort generate_cohort(const CohortSpec& spec);

/// One participant; exposed for property tests on a single long stream.
ParticipantRecord generate_participant(const GroupGenerator& generator, std::string id,
                                       std::size_t weeks, std::uint64_t seed);

}  // namespace mrsig
