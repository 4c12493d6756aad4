#include "mrsig/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "mrsig/errors.hpp"
#include "mrsig/random.hpp"

namespace mrsig {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::size_t draw_categorical(const std::array<double, 3>& probs, Rng& rng) {
  const double u = uniform_unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return 2;
}

int emit_score(double mean, double sd, int max, Rng& rng) {
  std::normal_distribution<double> noise(0.0, sd);
  const double v = std::round(mean + noise(rng));
  return static_cast<int>(std::clamp(v, 0.0, static_cast<double>(max)));
}

}  // namespace

void GroupGenerator::validate() const {
  auto check_row = [](const std::array<double, 3>& row, const char* what) {
    double sum = 0.0;
    for (double p : row) {
      if (!is_probability(p)) throw InvalidArgument(std::string(what) + ": entry outside [0,1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument(std::string(what) + ": row must sum to 1");
  };
  check_row(initial, "initial distribution");
  for (const auto& row : transition) check_row(row, "transition matrix");
  for (const auto& e : emission)
    if (e.asrm_sd < 0.0 || e.qids_sd < 0.0) throw InvalidArgument("emission sd must be >= 0");
  if (asrm_offset_sd < 0.0 || qids_offset_sd < 0.0)
    throw InvalidArgument("offset sd must be >= 0");
  if (!is_probability(missingness.base_probability))
    throw InvalidArgument("missing probability outside [0,1]");
  for (double m : missingness.state_multiplier)
    if (m < 0.0) throw InvalidArgument("missingness multiplier must be >= 0");
  if (missingness.repeat_probability > 1.0)
    throw InvalidArgument("repeat probability above 1");
  if (missingness.propensity_spread < 0.0) throw InvalidArgument("propensity spread must be >= 0");
}

GroupGenerator default_generator(Group group) {
  GroupGenerator g;
  g.group = group;
  switch (group) {
    case Group::HC:
      g.initial = {0.96, 0.02, 0.02};
      g.transition = {{{0.97, 0.015, 0.015}, {0.60, 0.38, 0.02}, {0.60, 0.02, 0.38}}};
      g.emission = {{{1.5, 1.5, 3.0, 2.0}, {7.0, 2.5, 4.0, 2.0}, {1.0, 1.0, 12.0, 3.0}}};
      g.asrm_offset_sd = 1.0;
      g.qids_offset_sd = 1.5;
      g.missingness = {0.06, {1.0, 1.5, 1.5}, 0.30, 0.4};
      break;
    case Group::BD:
      g.initial = {0.70, 0.10, 0.20};
      g.transition = {{{0.88, 0.04, 0.08}, {0.20, 0.75, 0.05}, {0.12, 0.02, 0.86}}};
      g.emission = {{{3.0, 2.0, 6.0, 3.0}, {10.0, 3.0, 6.0, 3.0}, {2.0, 1.5, 15.0, 4.0}}};
      g.asrm_offset_sd = 1.5;
      g.qids_offset_sd = 2.5;
      g.missingness = {0.10, {1.0, 2.0, 2.0}, 0.50, 0.4};
      break;
    case Group::BPD:
      // Same emissions and long-run state occupancy as BD, so mean scores barely
      // separate the two; rows are 0.2 * stay + 0.8 * BD's stationary distribution.
      g.initial = {0.538, 0.114, 0.348};
      g.transition = {{{0.6304, 0.0912, 0.2784}, {0.4304, 0.2912, 0.2784}, {0.4304, 0.0912, 0.4784}}};
      g.emission = {{{3.0, 2.0, 6.0, 3.0}, {10.0, 3.0, 6.0, 3.0}, {2.0, 1.5, 15.0, 4.0}}};
      g.asrm_offset_sd = 1.5;
      g.qids_offset_sd = 2.5;
      g.missingness = {0.30, {1.0, 1.5, 1.5}, 0.65, 0.4};
      break;
  }
  return g;
}

CohortSpec no_signal_spec(std::array<std::size_t, 3> sizes, std::size_t weeks, std::uint64_t seed) {
  CohortSpec spec;
  spec.sizes = sizes;
  spec.weeks = weeks;
  spec.seed = seed;
  const GroupGenerator shared = default_generator(Group::BD);
  for (Group g : kGroups) {
    auto& gen = spec.generators[static_cast<std::size_t>(g)];
    gen = shared;
    gen.group = g;
  }
  return spec;
}

ParticipantRecord generate_participant(const GroupGenerator& generator, std::string id,
                                       std::size_t weeks, std::uint64_t seed) {
  generator.validate();
  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double asrm_offset = generator.asrm_offset_sd * unit(rng);
  const double qids_offset = generator.qids_offset_sd * unit(rng);
  const auto& miss = generator.missingness;
  const double spread = miss.propensity_spread;
  const double propensity = spread > 0.0 ? std::exp(spread * unit(rng) - 0.5 * spread * spread) : 1.0;

  ParticipantRecord record;
  record.id = std::move(id);
  record.group = generator.group;
  record.weeks.reserve(weeks);
  std::size_t state = draw_categorical(generator.initial, rng);
  bool previous_missing = false;
  for (std::size_t t = 0; t < weeks; ++t) {
    if (t > 0) state = draw_categorical(generator.transition[state], rng);
    double p_miss = miss.base_probability * miss.state_multiplier[state] * propensity;
    if (previous_missing && miss.repeat_probability >= 0.0)
      p_miss = std::max(p_miss, miss.repeat_probability);
    p_miss = std::clamp(p_miss, 0.0, 1.0);
    const bool missing = uniform_unit(rng) < p_miss;
    // Scores are drawn even for missed weeks so the stream of draws does not
    // depend on the missingness outcome.
    const auto& e = generator.emission[state];
    const int asrm = emit_score(e.asrm_mean + asrm_offset, e.asrm_sd, kAsrmMax, rng);
    const int qids = emit_score(e.qids_mean + qids_offset, e.qids_sd, kQidsMax, rng);
    WeeklyObservation obs;
    obs.week = static_cast<int>(t);
    if (!missing) obs.scores = PairedScores{asrm, qids};
    record.weeks.push_back(obs);
    previous_missing = missing;
  }
  return record;
}

Cohort generate_cohort(const CohortSpec& spec) {
  if (spec.weeks < kMinEligibleWeeks)
    throw InvalidArgument("synthetic cohort needs at least " + std::to_string(kMinEligibleWeeks) +
                          " weeks per participant");
  for (std::size_t g = 0; g < 3; ++g) {
    if (spec.sizes[g] == 0) throw InvalidArgument("every group size must be at least 1");
    if (spec.generators[g].group != kGroups[g])
      throw InvalidArgument("generator order must be BD, HC, BPD");
    spec.generators[g].validate();
  }
  Cohort cohort;
  std::uint64_t index = 0;
  for (std::size_t g = 0; g < 3; ++g) {
    for (std::size_t i = 0; i < spec.sizes[g]; ++i, ++index) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-%03zu", std::string(to_string(kGroups[g])).c_str(), i + 1);
      cohort.participants.push_back(
          generate_participant(spec.generators[g], id, spec.weeks, derive_seed(spec.seed, index)));
    }
  }
  return cohort;
}

}  // namespace mrsig
