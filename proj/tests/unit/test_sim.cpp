#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "bondsim/error.hpp"
#include "bondsim/sim.hpp"

using namespace bondsim;

namespace {

DetectionConfig base(double fraction, BehaviorKind kind, std::size_t trials) {
  DetectionConfig c;
  c.attacker_fraction = fraction;
  c.behavior.kind = kind;
  c.params = params_for(fraction);
  c.trials = trials;
  c.seed = 99;
  c.duration_s = 30 * kSecondsPerDay;
  c.threads = 2;
  return c;
}

bool same(const TrialResult& a, const TrialResult& b) {
  return a.bootstrap_end_s == b.bootstrap_end_s && a.bootstrap_valid == b.bootstrap_valid &&
         a.first_failure_s == b.first_failure_s && a.abandoned_s == b.abandoned_s &&
         a.windows_tested == b.windows_tested && a.failures == b.failures &&
         a.attacker_blocks == b.attacker_blocks && a.network_blocks == b.network_blocks &&
         a.end_time_s == b.end_time_s;
}

}  // namespace

TEST(Detection, TrialIsDeterministic) {
  auto c = base(0.1, BehaviorKind::long_range_dishonest, 1);
  const auto a = run_detection_trial(c, 7);
  const auto b = run_detection_trial(c, 7);
  EXPECT_TRUE(same(a, b));
  const auto other = run_detection_trial(c, 8);
  EXPECT_FALSE(same(a, other));
}

TEST(Detection, ThreadCountDoesNotChangeResults) {
  auto c = base(0.1, BehaviorKind::short_range_dishonest, 12);
  c.threads = 1;
  const auto serial = run_detection_trials(c);
  c.threads = 4;
  const auto parallel = run_detection_trials(c);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].trial_index, i);
    EXPECT_TRUE(same(serial[i], parallel[i])) << i;
  }
}

TEST(Detection, HonestBlockShareWithinThreeSigma) {
  auto c = base(0.1, BehaviorKind::honest_random_walk, 1);
  c.behavior.walk_sd = 0.0;
  c.stop_at_first_failure = false;
  c.duration_s = 60 * kSecondsPerDay;
  const auto r = run_detection_trial(c, 0);
  const double n = static_cast<double>(r.network_blocks);
  const double share = r.attacker_blocks / n;
  EXPECT_LE(std::abs(share - 0.1), 3 * std::sqrt(0.1 * 0.9 / n));
}

TEST(Detection, HonestMinerPassesBootstrap) {
  auto c = base(0.1, BehaviorKind::honest_random_walk, 40);
  c.bootstrap_only = true;
  const auto trials = run_detection_trials(c);
  EXPECT_EQ(bootstrap_detection_rate(trials), 0.0);
  for (const auto& t : trials) EXPECT_EQ(t.attacker_blocks, c.params.n_long);
}

TEST(Detection, LargeShortRangeAttackerIsCaughtInBootstrap) {
  auto c = base(0.5, BehaviorKind::short_range_dishonest, 20);
  c.bootstrap_only = true;
  const auto trials = run_detection_trials(c);
  EXPECT_GE(bootstrap_detection_rate(trials), 0.9);
}

TEST(Detection, CurveIsMonotoneAndBounded) {
  auto c = base(0.1, BehaviorKind::long_range_dishonest, 40);
  const auto trials = run_detection_trials(c);
  std::vector<double> grid;
  for (int d = 0; d <= 30; ++d) grid.push_back(d * kSecondsPerDay);
  const auto curve = detection_curve(trials, grid);
  ASSERT_EQ(curve.size(), grid.size());
  EXPECT_GE(curve.front(), bootstrap_detection_rate(trials));
  for (std::size_t i = 0; i < curve.size(); ++i) {
    EXPECT_GE(curve[i], 0.0);
    EXPECT_LE(curve[i], 1.0);
    if (i) EXPECT_GE(curve[i], curve[i - 1]);
  }
}

TEST(Detection, AbandonmentOnlyAddsDetections) {
  auto c = base(0.1, BehaviorKind::short_range_dishonest, 30);
  c.bootstrap_only = true;
  const double without = bootstrap_detection_rate(run_detection_trials(c));
  c.abandonment = true;
  const double with = bootstrap_detection_rate(run_detection_trials(c));
  EXPECT_GE(with, without);
}

TEST(Detection, ConfigChecks) {
  auto c = base(0.1, BehaviorKind::honest_random_walk, 1);
  c.attacker_fraction = 0.001;
  EXPECT_THROW(c.check(), Error);
  c = base(0.1, BehaviorKind::preference_follower, 1);
  EXPECT_THROW(c.check(), Error);
  EXPECT_THROW(parse_behavior_kind("greedy"), Error);
  EXPECT_THROW(detection_curve(std::vector<TrialResult>{}, std::vector<double>{0.0}), Error);
}

TEST(Preference, ScheduleLookup) {
  const auto s = default_preference_schedule();
  EXPECT_EQ(preference_at(s, 0.0), 0.100);
  EXPECT_EQ(preference_at(s, kSecondsPerDay - 1), 0.100);
  EXPECT_EQ(preference_at(s, kSecondsPerDay), 0.075);
  EXPECT_EQ(preference_at(s, 6.5 * kSecondsPerDay), 0.563);
  EXPECT_EQ(preference_at(s, 13 * kSecondsPerDay), 0.211);
}

TEST(ExpectedTime, ZeroToleranceHoldsTarget) {
  ExpectedTimeConfig c;
  c.kappa = 0.0;
  const auto series = run_expected_time_sim(c);
  ASSERT_FALSE(series.points.empty());
  for (const auto& p : series.points) ASSERT_NEAR(p.expected_block_time_s, c.target_s, 1e-9);
}

TEST(ExpectedTime, WideToleranceFollowsPreference) {
  ExpectedTimeConfig c;
  c.kappa = 1.0;
  const auto series = run_expected_time_sim(c);
  for (const auto& p : series.points) {
    ASSERT_NEAR(p.actual_hps, p.preference_hps, 1e-9 * p.preference_hps) << p.block;
  }
}

TEST(ExpectedTime, ConstantRateIsTargetUnderBothRules) {
  for (DaaKind daa : {DaaKind::bonded, DaaKind::bch_cw144}) {
    ExpectedTimeConfig c;
    c.daa = daa;
    c.miners = {{0.5, {{1, 0.4}}}, {0.5, {{1, 0.4}}}};
    c.duration_s = 3 * kSecondsPerDay;
    const auto s = run_expected_time_sim(c).summary();
    EXPECT_NEAR(s.max_abs_deviation_s, 0.0, 1e-6);
  }
}

TEST(ExpectedTime, DeviationGrowsWithTolerance) {
  ExpectedTimeConfig c;
  c.daa = DaaKind::bch_cw144;
  const auto bch = run_expected_time_sim(c).summary();
  c.daa = DaaKind::bonded;
  double prev_max = 0.0, prev_int = 0.0;
  for (double k : {0.1, 0.25, 1.0}) {
    c.kappa = k;
    const auto s = run_expected_time_sim(c).summary();
    EXPECT_GT(s.max_abs_deviation_s, prev_max);
    EXPECT_GT(s.deviation_integral_s2, prev_int);
    EXPECT_LT(s.max_abs_deviation_s, bch.max_abs_deviation_s);
    EXPECT_LT(s.deviation_integral_s2, bch.deviation_integral_s2);
    prev_max = s.max_abs_deviation_s;
    prev_int = s.deviation_integral_s2;
  }
}

TEST(ExpectedTime, BondedDeviationBoundedByTolerance) {
  // With actual within (1 +/- kappa) of commitment, E = T c / a stays in
  // [T / (1 + kappa), T / (1 - kappa)].
  for (double k : {0.1, 0.25}) {
    ExpectedTimeConfig c;
    c.kappa = k;
    for (const auto& p : run_expected_time_sim(c).points) {
      ASSERT_GE(p.expected_block_time_s, c.target_s / (1 + k) - 1e-9);
      ASSERT_LE(p.expected_block_time_s, c.target_s / (1 - k) + 1e-9);
    }
  }
}
