#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "bondsim/bondsim.h"
#include "bondsim/daa.hpp"
#include "bondsim/error.hpp"
#include "bondsim/harness.hpp"
#include "bondsim/protocol.hpp"
#include "bondsim/sim.hpp"
#include "bondsim/stats.hpp"
#include "bondsim/validity.hpp"

using namespace bondsim;

struct bm_account {
  MinerAccount account;
  std::vector<Event> events;
};

struct bm_detection {
  std::vector<TrialResult> trials;
};

struct bm_series {
  ExpectedTimeSeries series;
};

namespace {

thread_local std::string g_last_error;

bm_status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::domain: return BM_ERR_DOMAIN;
    case ErrorCode::insufficient_data: return BM_ERR_INSUFFICIENT_DATA;
    case ErrorCode::unsupported_hash_rate: return BM_ERR_UNSUPPORTED_HASH_RATE;
    case ErrorCode::protocol_violation: return BM_ERR_PROTOCOL;
    case ErrorCode::config: return BM_ERR_CONFIG;
    case ErrorCode::data: return BM_ERR_DATA;
    case ErrorCode::io: return BM_ERR_IO;
    case ErrorCode::internal: return BM_ERR_INTERNAL;
  }
  return BM_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into a status and the thread's message.
template <class F>
bm_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return BM_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return BM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BM_ERR_INTERNAL;
  }
}

bm_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return BM_ERR_NULL_ARGUMENT;
}

#define BM_REQUIRE(ptr) \
  do {                  \
    if (!(ptr)) return null_arg(#ptr); \
  } while (0)

ValidityParams to_cpp(const bm_validity_params& p) {
  return {p.n_short, p.n_long, p.tau_short, p.tau_long};
}

bm_validity_params to_c(const ValidityParams& p) {
  return {p.n_short, p.n_long, p.tau_short, p.tau_long};
}

NetworkParams to_cpp(const bm_network_params& n) {
  NetworkParams p;
  p.target_s = n.target_s;
  p.bond_coins = n.bond_coins;
  p.mu = n.mu;
  p.gamma = n.gamma;
  p.abandon_p = n.abandon_p;
  return p;
}

BehaviorKind to_cpp(bm_behavior b) {
  switch (b) {
    case BM_HONEST: return BehaviorKind::honest_random_walk;
    case BM_SHORT_RANGE: return BehaviorKind::short_range_dishonest;
    case BM_LONG_RANGE: return BehaviorKind::long_range_dishonest;
  }
  fail(ErrorCode::config, "unknown behavior code " + std::to_string(static_cast<int>(b)));
}

DaaKind to_cpp(bm_daa d) {
  switch (d) {
    case BM_DAA_BONDED: return DaaKind::bonded;
    case BM_DAA_BCH_CW144: return DaaKind::bch_cw144;
  }
  fail(ErrorCode::config, "unknown DAA code " + std::to_string(static_cast<int>(d)));
}

bm_bond_state to_c(BondState s) {
  switch (s) {
    case BondState::bootstrapping: return BM_BOOTSTRAPPING;
    case BondState::fully_bonded: return BM_FULLY_BONDED;
    case BondState::divested: return BM_DIVESTED;
    case BondState::abandoned: return BM_ABANDONED;
  }
  return BM_DIVESTED;
}

}  // namespace

extern "C" {

const char* bm_version(void) { return "1.0.0"; }

const char* bm_status_string(bm_status status) {
  switch (status) {
    case BM_OK: return "ok";
    case BM_ERR_DOMAIN: return "domain error";
    case BM_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case BM_ERR_UNSUPPORTED_HASH_RATE: return "unsupported hash rate";
    case BM_ERR_PROTOCOL: return "protocol violation";
    case BM_ERR_CONFIG: return "config error";
    case BM_ERR_DATA: return "data error";
    case BM_ERR_IO: return "i/o error";
    case BM_ERR_INTERNAL: return "internal error";
    case BM_ERR_NULL_ARGUMENT: return "null argument";
  }
  return "unknown status";
}

const char* bm_last_error(void) { return g_last_error.c_str(); }

bm_status bm_ks_pvalue(double delta, size_t n, double* p_value) {
  BM_REQUIRE(p_value);
  return guarded([&] { *p_value = ks_pvalue(delta, n); });
}

bm_status bm_ks_test_expon1(const double* samples, size_t n, double* delta, double* p_value) {
  BM_REQUIRE(samples);
  return guarded([&] {
    const auto r = ks_test_expon1(std::span(samples, n));
    if (delta) *delta = r.delta;
    if (p_value) *p_value = r.p_value;
  });
}

bm_status bm_exp_quantile(double p, double mean, double* out) {
  BM_REQUIRE(out);
  return guarded([&] { *out = exp_quantile(p, mean); });
}

bm_status bm_params_for(double commit_fraction, bm_validity_params* out) {
  BM_REQUIRE(out);
  return guarded([&] { *out = to_c(params_for(commit_fraction)); });
}

bm_status bm_x_statistic(const bm_interval* interval, double* out) {
  BM_REQUIRE(interval);
  BM_REQUIRE(out);
  return guarded([&] {
    *out = x_statistic({interval->inter_arrival_s, interval->reported_hps, interval->avg_difficulty});
  });
}

bm_status bm_evaluate_valid(const bm_interval* intervals, size_t count, const bm_validity_params* params,
                            bm_verdict* out) {
  BM_REQUIRE(intervals);
  BM_REQUIRE(params);
  BM_REQUIRE(out);
  return guarded([&] {
    std::vector<ReportedInterval> v;
    v.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      v.push_back({intervals[i].inter_arrival_s, intervals[i].reported_hps, intervals[i].avg_difficulty});
    }
    const auto r = evaluate_valid(v, to_cpp(*params));
    *out = {r.short_test.delta, r.short_test.p_value, r.long_test.delta, r.long_test.p_value,
            r.short_pass, r.long_pass, r.valid()};
  });
}

bm_status bm_bonded_difficulty(double total_commitment_hps, double target_s, double* out) {
  BM_REQUIRE(out);
  return guarded([&] { *out = bm_difficulty(total_commitment_hps, target_s); });
}

bm_status bm_bch_difficulty(const double* difficulty, const double* block_time_s, size_t count,
                            double target_s, double* out) {
  BM_REQUIRE(difficulty);
  BM_REQUIRE(block_time_s);
  BM_REQUIRE(out);
  return guarded([&] {
    std::vector<WorkSample> w(count);
    for (size_t i = 0; i < count; ++i) w[i] = {difficulty[i], block_time_s[i]};
    *out = bch_difficulty(w, target_s);
  });
}

void bm_network_params_default(bm_network_params* out) {
  if (!out) return;
  const NetworkParams p;
  *out = {p.target_s, p.bond_coins, p.mu, p.gamma, p.abandon_p};
}

bm_status bm_reconcile_amount(double report_hps, double commitment_hps, double bond_coins, double* out) {
  BM_REQUIRE(out);
  return guarded([&] { *out = reconcile_amount(report_hps, commitment_hps, bond_coins); });
}

bm_status bm_abandonment_threshold(double commitment_hps, double total_commitment_hps,
                                   const bm_network_params* net, double* seconds) {
  BM_REQUIRE(net);
  BM_REQUIRE(seconds);
  return guarded([&] {
    *seconds = abandonment_threshold_s(commitment_hps, total_commitment_hps, to_cpp(*net));
  });
}

bm_status bm_account_create(uint32_t id, const bm_validity_params* params, double initial_commitment_hps,
                            double join_time_s, bm_account** out) {
  BM_REQUIRE(params);
  BM_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    *out = new bm_account{MinerAccount(id, to_cpp(*params), initial_commitment_hps, join_time_s), {}};
  });
}

void bm_account_destroy(bm_account* account) { delete account; }

bm_status bm_account_mine(bm_account* account, const bm_network_params* net, bm_block* block,
                          size_t* events_emitted) {
  BM_REQUIRE(account);
  BM_REQUIRE(net);
  BM_REQUIRE(block);
  return guarded([&] {
    BlockRecord b;
    b.height = block->height;
    b.miner = account->account.id();
    b.timestamp_s = block->timestamp_s;
    b.inter_arrival_s = block->inter_arrival_s;
    b.report_hps = block->report_hps;
    b.next_commitment_hps = block->next_commitment_hps;
    b.avg_difficulty = block->avg_difficulty;
    auto events = on_block_mined(account->account, b, to_cpp(*net));
    block->reconciliation_coins = b.reconciliation_coins;
    if (events_emitted) *events_emitted = events.size();
    account->events.insert(account->events.end(), events.begin(), events.end());
  });
}

bm_status bm_account_check_abandonment(bm_account* account, double now_s, double total_commitment_hps,
                                       const bm_network_params* net, int* abandoned) {
  BM_REQUIRE(account);
  BM_REQUIRE(net);
  return guarded([&] {
    const bool hit =
        check_abandonment(account->account, now_s, total_commitment_hps, to_cpp(*net), &account->events);
    if (abandoned) *abandoned = hit;
  });
}

bm_status bm_account_divest(bm_account* account, const bm_network_params* net, double time_s) {
  BM_REQUIRE(account);
  BM_REQUIRE(net);
  return guarded([&] {
    auto events = divest(account->account, to_cpp(*net), time_s);
    account->events.insert(account->events.end(), events.begin(), events.end());
  });
}

bm_status bm_account_state(const bm_account* account, bm_bond_state* out) {
  BM_REQUIRE(account);
  BM_REQUIRE(out);
  *out = to_c(account->account.state());
  return BM_OK;
}

bm_status bm_account_totals(const bm_account* account, bm_coin_totals* out) {
  BM_REQUIRE(account);
  BM_REQUIRE(out);
  const auto& t = account->account.totals();
  *out = {t.deposited, t.refunded, t.forfeited, t.slashed, t.burned, account->account.locked()};
  return BM_OK;
}

bm_status bm_account_write_events(const bm_account* account, const char* path) {
  BM_REQUIRE(account);
  BM_REQUIRE(path);
  return guarded([&] {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, std::string("cannot write '") + path + "'");
    write_event_log(out, account->events);
  });
}

bm_status bm_detection_config_default(double attacker_fraction, bm_behavior behavior,
                                      bm_detection_config* out) {
  BM_REQUIRE(out);
  return guarded([&] {
    DetectionConfig d;
    d.attacker_fraction = attacker_fraction;
    d.behavior.kind = to_cpp(behavior);
    d.params = params_for(attacker_fraction);
    *out = {attacker_fraction, behavior, d.behavior.walk_sd, d.behavior.drop_factor, 0.0,
            d.duration_s, d.trials, d.seed, d.target_s, d.network_hps, to_c(d.params),
            d.bootstrap_only, d.stop_at_first_failure, d.threads};
  });
}

bm_status bm_detection_run(const bm_detection_config* config, bm_detection** out) {
  BM_REQUIRE(config);
  BM_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    DetectionConfig d;
    d.attacker_fraction = config->attacker_fraction;
    d.behavior.kind = to_cpp(config->behavior);
    d.behavior.walk_sd = config->walk_sd;
    d.behavior.drop_factor = config->drop_factor;
    if (config->drop_duration_s > 0.0) d.behavior.drop_duration_s = config->drop_duration_s;
    d.duration_s = config->duration_s;
    d.trials = config->trials;
    d.seed = config->seed;
    d.target_s = config->target_s;
    d.network_hps = config->network_hps;
    d.params = to_cpp(config->params);
    d.bootstrap_only = config->bootstrap_only != 0;
    d.stop_at_first_failure = config->stop_at_first_failure != 0;
    d.threads = config->threads;
    auto result = std::make_unique<bm_detection>();
    result->trials = run_detection_trials(d);
    *out = result.release();
  });
}

void bm_detection_destroy(bm_detection* detection) { delete detection; }

size_t bm_detection_trial_count(const bm_detection* detection) {
  return detection ? detection->trials.size() : 0;
}

bm_status bm_detection_trial(const bm_detection* detection, size_t index, bm_trial_summary* out) {
  BM_REQUIRE(detection);
  BM_REQUIRE(out);
  return guarded([&] {
    if (index >= detection->trials.size()) fail(ErrorCode::domain, "trial index out of range");
    const auto& t = detection->trials[index];
    *out = {t.bootstrap_end_s.has_value(), t.bootstrap_valid.value_or(false), t.detected(),
            t.bootstrap_end_s.value_or(0.0), t.first_failure_s.value_or(0.0), t.windows_tested,
            t.failures, t.attacker_blocks, t.network_blocks};
  });
}

bm_status bm_detection_bootstrap_rate(const bm_detection* detection, double* out) {
  BM_REQUIRE(detection);
  BM_REQUIRE(out);
  return guarded([&] { *out = bootstrap_detection_rate(detection->trials); });
}

bm_status bm_detection_curve(const bm_detection* detection, const double* grid_s, size_t count,
                             double* probability) {
  BM_REQUIRE(detection);
  BM_REQUIRE(grid_s);
  BM_REQUIRE(probability);
  return guarded([&] {
    const auto curve = detection_curve(detection->trials, std::span(grid_s, count));
    std::copy(curve.begin(), curve.end(), probability);
  });
}

void bm_block_time_config_default(bm_daa daa, bm_block_time_config* out) {
  if (!out) return;
  const ExpectedTimeConfig c;
  *out = {daa, c.target_s, c.available_hps, c.kappa, c.mu, c.window_n, c.update_every, c.duration_s};
}

bm_status bm_block_time_run(const bm_block_time_config* config, bm_series** out) {
  BM_REQUIRE(config);
  BM_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    ExpectedTimeConfig c;
    c.daa = to_cpp(config->daa);
    c.target_s = config->target_s;
    c.available_hps = config->available_hps;
    c.kappa = config->kappa;
    c.mu = config->mu;
    c.window_n = config->window_n;
    c.update_every = config->update_every;
    c.duration_s = config->duration_s;
    *out = new bm_series{run_expected_time_sim(c)};
  });
}

void bm_series_destroy(bm_series* series) { delete series; }

size_t bm_series_size(const bm_series* series) { return series ? series->series.points.size() : 0; }

bm_status bm_series_point_at(const bm_series* series, size_t index, bm_series_point* out) {
  BM_REQUIRE(series);
  BM_REQUIRE(out);
  return guarded([&] {
    if (index >= series->series.points.size()) fail(ErrorCode::domain, "point index out of range");
    const auto& p = series->series.points[index];
    *out = {p.block, p.time_s, p.preference_hps, p.actual_hps, p.committed_hps, p.difficulty,
            p.expected_block_time_s};
  });
}

bm_status bm_series_summary(const bm_series* series, double tolerance, bm_deviation_summary* out) {
  BM_REQUIRE(series);
  BM_REQUIRE(out);
  return guarded([&] {
    const auto d = series->series.summary(tolerance);
    *out = {d.min_block_time_s, d.max_block_time_s, d.max_abs_deviation_s, d.deviation_integral_s2,
            d.deviation_duration_s};
  });
}

int bm_run_command(const char* command, const bm_run_options* options) {
  if (!command || !options) {
    std::cerr << "error (config): missing command or options\n";
    return harness::kExitConfig;
  }
  harness::CommandKind kind;
  try {
    kind = harness::parse_command(command);
  } catch (const Error& e) {
    std::cerr << "error (config): " << e.what() << '\n';
    return harness::kExitConfig;
  }
  harness::RunOptions o;
  o.config_path = options->config_path ? options->config_path : "";
  if (options->out_dir) o.out_dir = options->out_dir;
  if (options->blocks_path) o.blocks_path = options->blocks_path;
  if (options->has_seed) o.seed = options->seed;
  if (options->trials) o.trials = options->trials;
  o.full = options->full != 0;
  if (options->threads) o.threads = options->threads;
  return harness::run_command(kind, o, std::cout, std::cerr);
}

}  // extern "C"
