#include <gtest/gtest.h>

#include "mrsig/errors.hpp"
#include "mrsig/synth.hpp"

using namespace mrsig;

namespace {

double missing_share(const Cohort& c, std::optional<Group> only = std::nullopt) {
  std::size_t missing = 0, total = 0;
  for (const auto& p : c.participants) {
    if (only && p.group != *only) continue;
    for (const auto& w : p.weeks) {
      missing += w.missing();
      ++total;
    }
  }
  return static_cast<double>(missing) / static_cast<double>(total);
}

GroupGenerator plain_bernoulli(double p) {
  GroupGenerator g = default_generator(Group::HC);
  g.missingness = {p, {1, 1, 1}, -1.0, 0.0};
  return g;
}

}  // namespace

TEST(Synth, DefaultCohortShape) {
  CohortSpec spec;
  spec.seed = 1;
  const Cohort c = generate_cohort(spec);
  ASSERT_EQ(c.participants.size(), 126u);
  EXPECT_EQ(c.participants.front().id, "BD-001");
  EXPECT_EQ(c.participants[49].id, "HC-001");
  EXPECT_EQ(c.participants.back().id, "BPD-032");
  std::array<std::size_t, 3> per_group{};
  for (const auto& p : c.participants) {
    ++per_group[static_cast<std::size_t>(p.group)];
    ASSERT_EQ(p.weeks.size(), 51u);
    EXPECT_GE(p.weeks.size(), kMinEligibleWeeks);
    for (std::size_t t = 0; t < p.weeks.size(); ++t) {
      EXPECT_EQ(p.weeks[t].week, static_cast<int>(t));
      if (p.weeks[t].missing()) continue;
      const auto s = *p.weeks[t].scores;
      EXPECT_GE(s.asrm, 0);
      EXPECT_LE(s.asrm, kAsrmMax);
      EXPECT_GE(s.qids, 0);
      EXPECT_LE(s.qids, kQidsMax);
    }
  }
  EXPECT_EQ(per_group, (std::array<std::size_t, 3>{49, 45, 32}));
}

TEST(Synth, SameSeedSameCohort) {
  CohortSpec spec;
  spec.sizes = {5, 5, 5};
  spec.seed = 99;
  EXPECT_EQ(generate_cohort(spec), generate_cohort(spec));
  CohortSpec other = spec;
  other.seed = 100;
  EXPECT_NE(generate_cohort(spec), generate_cohort(other));
}

TEST(Synth, ZeroMissingProbabilityMeansNoGaps) {
  CohortSpec spec;
  spec.sizes = {10, 10, 10};
  spec.seed = 3;
  for (auto& g : spec.generators) g.missingness = {0.0, {1, 1, 1}, -1.0, 0.0};
  EXPECT_EQ(missing_share(generate_cohort(spec)), 0.0);
  // A repeat probability never triggers without a first miss.
  for (auto& g : spec.generators) g.missingness.repeat_probability = 0.9;
  EXPECT_EQ(missing_share(generate_cohort(spec)), 0.0);
}

TEST(Synth, LongRunMissingRateMatchesConfiguration) {
  for (double p : {0.1, 0.3, 0.6}) {
    const auto r = generate_participant(plain_bernoulli(p), "x", 10000, 17);
    Cohort c;
    c.participants.push_back(r);
    EXPECT_NEAR(missing_share(c), p, 0.01) << p;
  }
}

TEST(Synth, ConstantEmissionIsRoundedAndClipped) {
  GroupGenerator g = plain_bernoulli(0.0);
  g.initial = {1, 0, 0};
  g.transition = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  g.emission[0] = {30.0, 0.0, 6.4, 0.0};
  g.asrm_offset_sd = 0.0;
  g.qids_offset_sd = 0.0;
  const auto r = generate_participant(g, "c", 30, 1);
  for (const auto& w : r.weeks) EXPECT_EQ(*w.scores, (PairedScores{20, 6}));
}

TEST(Synth, DefaultGroupsOrderMissingness) {
  CohortSpec spec;
  spec.seed = 5;
  const Cohort c = generate_cohort(spec);
  const double hc = missing_share(c, Group::HC), bd = missing_share(c, Group::BD),
               bpd = missing_share(c, Group::BPD);
  EXPECT_LT(hc, bd);
  EXPECT_LT(bd, bpd);
  EXPECT_GE(bpd, 0.25);
}

TEST(Synth, NoSignalSpecSharesDynamics) {
  const auto spec = no_signal_spec({4, 4, 4}, 30, 2);
  for (std::size_t g = 0; g < 3; ++g) {
    EXPECT_EQ(spec.generators[g].group, kGroups[g]);
    EXPECT_EQ(spec.generators[g].transition, spec.generators[0].transition);
    EXPECT_EQ(spec.generators[g].missingness.base_probability, spec.generators[0].missingness.base_probability);
  }
  EXPECT_EQ(generate_cohort(spec).participants.size(), 12u);
}

TEST(Synth, RejectsInvalidSpecs) {
  CohortSpec spec;
  spec.weeks = 19;
  EXPECT_THROW(generate_cohort(spec), InvalidArgument);
  spec.weeks = 20;
  spec.sizes = {1, 0, 1};
  EXPECT_THROW(generate_cohort(spec), InvalidArgument);
  spec.sizes = {1, 1, 1};
  spec.generators[1].transition[0] = {0.5, 0.4, 0.0};
  EXPECT_THROW(generate_cohort(spec), InvalidArgument);
  spec.generators[1] = default_generator(Group::HC);
  spec.generators[2].missingness.base_probability = 1.5;
  EXPECT_THROW(generate_cohort(spec), InvalidArgument);
  spec.generators[2] = default_generator(Group::HC);
  EXPECT_THROW(generate_cohort(spec), InvalidArgument);
  GroupGenerator g = default_generator(Group::BD);
  g.emission[1].qids_sd = -1.0;
  EXPECT_THROW(g.validate(), InvalidArgument);
}
