#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "bondsim/bondsim.h"

TEST(CApi, StatusStringsAndLastError) {
  EXPECT_STREQ(bm_status_string(BM_OK), "ok");
  double p = 0;
  EXPECT_EQ(bm_ks_pvalue(-1.0, 10, &p), BM_ERR_DOMAIN);
  EXPECT_STRNE(bm_last_error(), "");
  EXPECT_EQ(bm_ks_pvalue(0.1, 10, nullptr), BM_ERR_NULL_ARGUMENT);
  EXPECT_EQ(bm_ks_pvalue(0.1, 10, &p), BM_OK);
  EXPECT_STREQ(bm_last_error(), "");
  EXPECT_GT(p, 0.0);
  EXPECT_LE(p, 1.0);
  EXPECT_NE(std::string(bm_version()), "");
}

TEST(CApi, StatsAndValidity) {
  double q = 0;
  ASSERT_EQ(bm_exp_quantile(0.5, 2.0, &q), BM_OK);
  EXPECT_NEAR(q, 2.0 * std::log(2.0), 1e-15);

  std::vector<double> xs;
  for (int k = 1; k <= 100; ++k) xs.push_back(-std::log(1 - (k - 0.5) / 100));
  double delta = 0, p = 0;
  ASSERT_EQ(bm_ks_test_expon1(xs.data(), xs.size(), &delta, &p), BM_OK);
  EXPECT_NEAR(delta, 0.005, 1e-12);
  EXPECT_GT(p, 0.99);

  bm_validity_params params{};
  ASSERT_EQ(bm_params_for(0.1, &params), BM_OK);
  EXPECT_EQ(params.n_short, 20u);
  EXPECT_EQ(params.n_long, 1000u);
  EXPECT_EQ(bm_params_for(0.004, &params), BM_ERR_UNSUPPORTED_HASH_RATE);

  bm_interval iv{600.0, 1e15, 6e17};
  double x = 0;
  ASSERT_EQ(bm_x_statistic(&iv, &x), BM_OK);
  EXPECT_DOUBLE_EQ(x, 1.0);

  std::vector<bm_interval> intervals;
  for (double v : xs) intervals.push_back({v * 600.0, 1e15, 6e17});
  bm_validity_params small{2, 100, 1e-7, 1e-7};
  bm_verdict verdict{};
  ASSERT_EQ(bm_evaluate_valid(intervals.data(), intervals.size(), &small, &verdict), BM_OK);
  EXPECT_TRUE(verdict.valid);
  EXPECT_EQ(bm_evaluate_valid(intervals.data(), 50, &small, &verdict), BM_ERR_INSUFFICIENT_DATA);
}

TEST(CApi, Difficulty) {
  double d = 0;
  ASSERT_EQ(bm_bonded_difficulty(1e15, 600, &d), BM_OK);
  EXPECT_EQ(d, 6e17);
  std::vector<double> diff(144, 6e17), times(144, 1.0);
  ASSERT_EQ(bm_bch_difficulty(diff.data(), times.data(), 144, 600, &d), BM_OK);
  EXPECT_DOUBLE_EQ(d, 2 * 6e17);
}

TEST(CApi, AccountLifecycle) {
  bm_network_params net;
  bm_network_params_default(&net);
  EXPECT_EQ(net.target_s, 600.0);
  double f = 0;
  ASSERT_EQ(bm_reconcile_amount(150, 100, 1, &f), BM_OK);
  EXPECT_EQ(f, 0.5);
  double th = 0;
  ASSERT_EQ(bm_abandonment_threshold(1e14, 1e15, &net, &th), BM_OK);
  EXPECT_NEAR(th / 3600, 19.19, 0.01);

  bm_validity_params small{2, 10, 1e-7, 1e-7};
  bm_account* acct = nullptr;
  ASSERT_EQ(bm_account_create(4, &small, 100.0, 0.0, &acct), BM_OK);
  double t = 0;
  for (int k = 1; k <= 12; ++k) {
    const double x = -std::log(1 - (k - 0.5) / 12);
    bm_block b{static_cast<uint64_t>(k), 0, x * 6e5 / 100.0, 100.0, 100.0, 6e5, 0};
    t += b.inter_arrival_s;
    b.timestamp_s = t;
    size_t emitted = 0;
    ASSERT_EQ(bm_account_mine(acct, &net, &b, &emitted), BM_OK) << bm_last_error();
    EXPECT_GE(emitted, 2u);
    if (k > 10) EXPECT_EQ(b.reconciliation_coins, 1.0);
  }
  bm_bond_state state;
  ASSERT_EQ(bm_account_state(acct, &state), BM_OK);
  EXPECT_EQ(state, BM_FULLY_BONDED);
  ASSERT_EQ(bm_account_divest(acct, &net, t + 1), BM_OK);
  bm_coin_totals totals{};
  ASSERT_EQ(bm_account_totals(acct, &totals), BM_OK);
  EXPECT_EQ(totals.deposited, 12 * 100000000LL);
  EXPECT_EQ(totals.refunded, totals.deposited);
  EXPECT_EQ(totals.locked, 0);
  EXPECT_EQ(bm_account_divest(acct, &net, t + 2), BM_ERR_PROTOCOL);

  const auto path = std::filesystem::temp_directory_path() / "bondsim_capi_events.jsonl";
  ASSERT_EQ(bm_account_write_events(acct, path.string().c_str()), BM_OK);
  std::ifstream in(path);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_GT(lines, 24);
  std::filesystem::remove(path);
  bm_account_destroy(acct);
  bm_account_destroy(nullptr);
}

TEST(CApi, DetectionRun) {
  bm_detection_config cfg;
  ASSERT_EQ(bm_detection_config_default(0.5, BM_SHORT_RANGE, &cfg), BM_OK);
  cfg.trials = 10;
  cfg.seed = 3;
  cfg.bootstrap_only = 1;
  bm_detection* det = nullptr;
  ASSERT_EQ(bm_detection_run(&cfg, &det), BM_OK) << bm_last_error();
  EXPECT_EQ(bm_detection_trial_count(det), 10u);
  double rate = 0;
  ASSERT_EQ(bm_detection_bootstrap_rate(det, &rate), BM_OK);
  EXPECT_GE(rate, 0.8);
  bm_trial_summary s{};
  ASSERT_EQ(bm_detection_trial(det, 0, &s), BM_OK);
  EXPECT_TRUE(s.bootstrapped);
  EXPECT_EQ(bm_detection_trial(det, 10, &s), BM_ERR_DOMAIN);
  const double grid[] = {0.0, 86400.0};
  double prob[2];
  ASSERT_EQ(bm_detection_curve(det, grid, 2, prob), BM_OK);
  EXPECT_LE(prob[0], prob[1]);
  bm_detection_destroy(det);

  cfg.attacker_fraction = 0.001;
  EXPECT_NE(bm_detection_run(&cfg, &det), BM_OK);
}

TEST(CApi, BlockTimeSeries) {
  bm_block_time_config cfg;
  bm_block_time_config_default(BM_DAA_BONDED, &cfg);
  cfg.kappa = 0.0;
  bm_series* s = nullptr;
  ASSERT_EQ(bm_block_time_run(&cfg, &s), BM_OK);
  ASSERT_GT(bm_series_size(s), 1000u);
  bm_series_point pt{};
  ASSERT_EQ(bm_series_point_at(s, 5, &pt), BM_OK);
  EXPECT_NEAR(pt.expected_block_time_s, 600.0, 1e-9);
  bm_deviation_summary sum{};
  ASSERT_EQ(bm_series_summary(s, 0.01, &sum), BM_OK);
  EXPECT_NEAR(sum.max_abs_deviation_s, 0.0, 1e-9);
  bm_series_destroy(s);
}

TEST(CApi, RunCommandBadConfig) {
  bm_run_options opts{};
  opts.config_path = "/nonexistent/bondsim.json";
  opts.out_dir = "/tmp/bondsim-capi-out";
  EXPECT_EQ(bm_run_command("table2", &opts), 1);
  EXPECT_EQ(bm_run_command("nope", &opts), 1);
}
