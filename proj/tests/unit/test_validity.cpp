#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "bondsim/error.hpp"
#include "bondsim/rng.hpp"
#include "bondsim/stats.hpp"
#include "bondsim/validity.hpp"

using namespace bondsim;

namespace {

// Honest miner at rate h under difficulty D: T ~ Expon(D / h), report h.
std::vector<ReportedInterval> honest(RngStream& rng, std::size_t n, double h = 1e13,
                                     double difficulty = 6e15) {
  std::vector<ReportedInterval> v(n);
  for (auto& i : v) i = {exp_sample(difficulty / h, rng), h, difficulty};
  return v;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

}  // namespace

TEST(Transform, UnitsCancel) {
  const double h = 3.7e12;
  EXPECT_DOUBLE_EQ(x_statistic({1200.0, h / 2, 600.0 * h}), 1.0);
  EXPECT_EQ(x_statistic({500.0, 0.0, 1e9}), 0.0);
  EXPECT_EQ(code_of([] { x_statistic({1.0, 1.0, 0.0}); }), ErrorCode::domain);
  const std::vector<ReportedInterval> v{{1.0, 2.0, 4.0}, {3.0, 1.0, 3.0}};
  EXPECT_EQ(transform(v), (std::vector<double>{0.5, 1.0}));
}

TEST(Transform, HonestSamplesMostlyPass) {
  RngStream rng(8, 0);
  int pass = 0;
  for (int t = 0; t < 1000; ++t) {
    if (ks_window(honest(rng, 100), 100).p_value > 0.01) ++pass;
  }
  EXPECT_GE(pass, 980);
}

TEST(KsTest, PerfectGridPassesAndZerosFail) {
  std::vector<ReportedInterval> grid, zeros;
  for (int i = 1; i <= 100; ++i) {
    grid.push_back({exp_quantile((i - 0.5) / 100.0, 1.0), 1.0, 1.0});
    zeros.push_back({1e-9, 1.0, 1.0});
  }
  EXPECT_TRUE(ks_test(grid, 100, 0.5));
  EXPECT_FALSE(ks_test(zeros, 100, 1e-7));
}

TEST(KsTest, InsufficientDataIsAnError) {
  RngStream rng(1, 0);
  const auto v = honest(rng, 99);
  EXPECT_EQ(code_of([&] { ks_test(v, 100, 1e-7); }), ErrorCode::insufficient_data);
  ValidityParams p{2, 100, 1e-7, 1e-7};
  EXPECT_EQ(code_of([&] { valid(v, p); }), ErrorCode::insufficient_data);
}

TEST(KsTest, NoHonestFailuresAtTableThreshold) {
  RngStream rng(77, 0);
  int failures = 0;
  for (int t = 0; t < 1000; ++t) failures += !ks_test(honest(rng, 100), 100, 1e-7);
  EXPECT_EQ(failures, 0);
}

TEST(Valid, IsProductOfSubTests) {
  RngStream rng(3, 0);
  const ValidityParams p{20, 1000, 1e-10, 1e-10};
  auto v = honest(rng, 1000);
  auto verdict = evaluate_valid(v, p);
  EXPECT_TRUE(verdict.short_pass && verdict.long_pass && verdict.valid());
  // Crush the last n_s intervals: the short test fails, the long one need not.
  for (std::size_t i = v.size() - 20; i < v.size(); ++i) v[i].inter_arrival_s *= 40.0;
  verdict = evaluate_valid(v, p);
  EXPECT_FALSE(verdict.short_pass);
  EXPECT_EQ(verdict.valid(), verdict.short_pass && verdict.long_pass);
  EXPECT_EQ(valid(v, p), ks_test(v, 20, 1e-10) && ks_test(v, 1000, 1e-10));
}

TEST(Valid, InvariantUnderCommonRescaling) {
  RngStream rng(4, 0);
  const ValidityParams p{2, 100, 1e-7, 1e-7};
  for (int t = 0; t < 50; ++t) {
    auto v = honest(rng, 100);
    if (t % 2) {
      for (std::size_t i = 50; i < 100; ++i) v[i].inter_arrival_s *= 4.0;
    }
    auto scaled = v;
    for (auto& i : scaled) {
      i.reported_hps *= 1024.0;
      i.avg_difficulty *= 1024.0;
    }
    const auto a = evaluate_valid(v, p), b = evaluate_valid(scaled, p);
    EXPECT_EQ(a.valid(), b.valid());
    EXPECT_DOUBLE_EQ(a.long_test.delta, b.long_test.delta);
  }
}

TEST(ParamsFor, TableRowsAndStepPolicy) {
  EXPECT_EQ(params_for(0.01), (ValidityParams{2, 100, 1e-7, 1e-7}));
  EXPECT_EQ(params_for(0.10), (ValidityParams{20, 1000, 1e-10, 1e-10}));
  EXPECT_EQ(params_for(0.25), (ValidityParams{50, 2500, 1e-12, 1e-12}));
  EXPECT_EQ(params_for(0.50), (ValidityParams{100, 5000, 1e-12, 1e-12}));
  EXPECT_EQ(params_for(0.30), (ValidityParams{50, 2500, 1e-12, 1e-12}));
  EXPECT_EQ(params_for(0.005), params_for(0.01));
  EXPECT_EQ(params_for(0.99), params_for(0.5));
  EXPECT_EQ(code_of([] { params_for(0.004); }), ErrorCode::unsupported_hash_rate);
}

TEST(ParamsFor, WindowDurationsAreEquitable) {
  const double T = 600.0;
  for (const auto& row : params_table()) {
    const double q = row.min_fraction;
    const double short_days = row.params.n_short * T / q / 86400.0;
    const double long_days = row.params.n_long * T / q / 86400.0;
    EXPECT_GE(short_days, 1.0);
    EXPECT_LE(short_days, 2.0);
    EXPECT_GE(long_days, 60.0);
    EXPECT_LE(long_days, 80.0);
  }
}

TEST(ValidityParams, Check) {
  EXPECT_NO_THROW((ValidityParams{1, 2, 0.1, 0.1}.check()));
  EXPECT_THROW((ValidityParams{0, 2, 0.1, 0.1}.check()), Error);
  EXPECT_THROW((ValidityParams{5, 5, 0.1, 0.1}.check()), Error);
  EXPECT_THROW((ValidityParams{1, 5, 0.0, 0.1}.check()), Error);
  EXPECT_THROW((ValidityParams{1, 5, 0.1, 1.0}.check()), Error);
}

TEST(KsCritical, BracketsThreshold) {
  for (auto [n, tau] : {std::pair<std::size_t, double>{2, 1e-7}, {100, 1e-7}, {20, 1e-10},
                        {1000, 1e-10}, {2500, 1e-12}, {5000, 1e-12}}) {
    const auto c = ks_critical(n, tau);
    EXPECT_LE(c.pass_below, c.fail_from);
    EXPECT_GT(ks_pvalue(c.pass_below, n), tau);
    EXPECT_LE(ks_pvalue(c.fail_from, n), tau);
    EXPECT_LT(c.fail_from - c.pass_below, 1e-9);
  }
}

TEST(SlidingValidity, MatchesDirectEvaluation) {
  RngStream rng(10, 0);
  const ValidityParams p{5, 60, 1e-3, 1e-3};
  SlidingValidity sliding(p);
  std::vector<ReportedInterval> all;
  for (int i = 0; i < 600; ++i) {
    ReportedInterval iv{exp_sample(1.0, rng), 1.0, 1.0};
    if (i >= 300 && i < 320) iv.inter_arrival_s *= 6.0;  // a deviation episode
    if (i >= 450) iv.inter_arrival_s *= 1.0 + (i - 450) / 60.0;
    all.push_back(iv);
    sliding.push(iv);
    ASSERT_EQ(sliding.ready(), all.size() >= p.n_long);
    if (!sliding.ready()) continue;
    const auto direct = evaluate_valid(all, p);
    const auto inc = sliding.evaluate();
    EXPECT_DOUBLE_EQ(inc.short_test.delta, direct.short_test.delta) << i;
    EXPECT_DOUBLE_EQ(inc.long_test.delta, direct.long_test.delta) << i;
    EXPECT_EQ(inc.valid(), direct.valid()) << i;
    EXPECT_EQ(sliding.passes(), direct.valid()) << i;
  }
}

TEST(SlidingValidity, NotReadyIsInsufficientData) {
  SlidingValidity s({2, 10, 0.01, 0.01});
  s.push(1.0);
  EXPECT_EQ(code_of([&] { s.passes(); }), ErrorCode::insufficient_data);
}
