/* C interface to the bonded-mining simulator.
 *
 * Every fallible call returns a bm_status; on failure a message for the
 * calling thread is available from bm_last_error(). Objects are opaque and
 * released with the matching *_destroy function (NULL is accepted). */
#ifndef BONDSIM_BONDSIM_H
#define BONDSIM_BONDSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(BONDSIM_BUILDING)
#    define BM_API __declspec(dllexport)
#  else
#    define BM_API __declspec(dllimport)
#  endif
#else
#  define BM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bm_status {
  BM_OK = 0,
  BM_ERR_DOMAIN = 1,
  BM_ERR_INSUFFICIENT_DATA = 2,
  BM_ERR_UNSUPPORTED_HASH_RATE = 3,
  BM_ERR_PROTOCOL = 4,
  BM_ERR_CONFIG = 5,
  BM_ERR_DATA = 6,
  BM_ERR_IO = 7,
  BM_ERR_INTERNAL = 8,
  BM_ERR_NULL_ARGUMENT = 9
} bm_status;

BM_API const char* bm_version(void);
BM_API const char* bm_status_string(bm_status status);
/* Message of the last failed call on this thread; "" if none. */
BM_API const char* bm_last_error(void);

/* ---- statistics ---- */

BM_API bm_status bm_ks_pvalue(double delta, size_t n, double* p_value);
BM_API bm_status bm_ks_test_expon1(const double* samples, size_t n, double* delta, double* p_value);
BM_API bm_status bm_exp_quantile(double p, double mean, double* out);

/* ---- validity test ---- */

typedef struct bm_validity_params {
  size_t n_short;
  size_t n_long;
  double tau_short;
  double tau_long;
} bm_validity_params;

typedef struct bm_interval {
  double inter_arrival_s;
  double reported_hps;
  double avg_difficulty;
} bm_interval;

typedef struct bm_verdict {
  double short_delta;
  double short_p_value;
  double long_delta;
  double long_p_value;
  int short_pass;
  int long_pass;
  int valid;
} bm_verdict;

BM_API bm_status bm_params_for(double commit_fraction, bm_validity_params* out);
BM_API bm_status bm_x_statistic(const bm_interval* interval, double* out);
/* Tests the most recent windows of `intervals` (oldest first). */
BM_API bm_status bm_evaluate_valid(const bm_interval* intervals, size_t count,
                                   const bm_validity_params* params, bm_verdict* out);

/* ---- difficulty ---- */

BM_API bm_status bm_bonded_difficulty(double total_commitment_hps, double target_s, double* out);
/* cw-144 rule over parallel arrays of per-block difficulty and block time. */
BM_API bm_status bm_bch_difficulty(const double* difficulty, const double* block_time_s, size_t count,
                                   double target_s, double* out);

/* ---- protocol ---- */

typedef enum bm_bond_state {
  BM_BOOTSTRAPPING = 0,
  BM_FULLY_BONDED = 1,
  BM_DIVESTED = 2,
  BM_ABANDONED = 3
} bm_bond_state;

typedef struct bm_network_params {
  double target_s;
  double bond_coins;
  double mu;
  double gamma;
  double abandon_p;
} bm_network_params;

typedef struct bm_block {
  uint64_t height;
  double timestamp_s;
  double inter_arrival_s;
  double report_hps;
  double next_commitment_hps;
  double avg_difficulty;
  double reconciliation_coins; /* out */
} bm_block;

/* Ledger totals in base units (1e8 per coin). */
typedef struct bm_coin_totals {
  int64_t deposited;
  int64_t refunded;
  int64_t forfeited;
  int64_t slashed;
  int64_t burned;
  int64_t locked;
} bm_coin_totals;

typedef struct bm_account bm_account;

BM_API void bm_network_params_default(bm_network_params* out);
BM_API bm_status bm_reconcile_amount(double report_hps, double commitment_hps, double bond_coins,
                                     double* out);
BM_API bm_status bm_abandonment_threshold(double commitment_hps, double total_commitment_hps,
                                          const bm_network_params* net, double* seconds);

BM_API bm_status bm_account_create(uint32_t id, const bm_validity_params* params,
                                   double initial_commitment_hps, double join_time_s,
                                   bm_account** out);
BM_API void bm_account_destroy(bm_account* account);
/* Presents a mined block; fills block->reconciliation_coins. */
BM_API bm_status bm_account_mine(bm_account* account, const bm_network_params* net, bm_block* block,
                                 size_t* events_emitted);
BM_API bm_status bm_account_check_abandonment(bm_account* account, double now_s,
                                              double total_commitment_hps,
                                              const bm_network_params* net, int* abandoned);
BM_API bm_status bm_account_divest(bm_account* account, const bm_network_params* net, double time_s);
BM_API bm_status bm_account_state(const bm_account* account, bm_bond_state* out);
BM_API bm_status bm_account_totals(const bm_account* account, bm_coin_totals* out);
/* Writes the account's event history as line-delimited JSON. */
BM_API bm_status bm_account_write_events(const bm_account* account, const char* path);

/* ---- detection experiments ---- */

typedef enum bm_behavior {
  BM_HONEST = 0,
  BM_SHORT_RANGE = 1,
  BM_LONG_RANGE = 2
} bm_behavior;

typedef struct bm_detection_config {
  double attacker_fraction;
  bm_behavior behavior;
  double walk_sd;
  double drop_factor;
  double drop_duration_s; /* <= 0: episode lasts n_short blocks */
  double duration_s;      /* simulated time after bootstrapping */
  size_t trials;
  uint64_t seed;
  double target_s;
  double network_hps;
  bm_validity_params params;
  int bootstrap_only;
  int stop_at_first_failure;
  unsigned threads; /* 0 = hardware concurrency */
} bm_detection_config;

typedef struct bm_trial_summary {
  int bootstrapped;
  int bootstrap_valid;
  int detected;
  double bootstrap_end_s;
  double first_failure_s;
  size_t windows_tested;
  size_t failures;
  size_t attacker_blocks;
  size_t network_blocks;
} bm_trial_summary;

typedef struct bm_detection bm_detection;

/* Defaults for a fraction and behavior, with that fraction's window policy. */
BM_API bm_status bm_detection_config_default(double attacker_fraction, bm_behavior behavior,
                                             bm_detection_config* out);
BM_API bm_status bm_detection_run(const bm_detection_config* config, bm_detection** out);
BM_API void bm_detection_destroy(bm_detection* detection);
BM_API size_t bm_detection_trial_count(const bm_detection* detection);
BM_API bm_status bm_detection_trial(const bm_detection* detection, size_t index, bm_trial_summary* out);
BM_API bm_status bm_detection_bootstrap_rate(const bm_detection* detection, double* out);
BM_API bm_status bm_detection_curve(const bm_detection* detection, const double* grid_s, size_t count,
                                    double* probability);

/* ---- expected block time ---- */

typedef enum bm_daa { BM_DAA_BONDED = 0, BM_DAA_BCH_CW144 = 1 } bm_daa;

typedef struct bm_block_time_config {
  bm_daa daa;
  double target_s;
  double available_hps;
  double kappa;
  double mu;
  size_t window_n;
  size_t update_every;
  double duration_s;
} bm_block_time_config;

typedef struct bm_series_point {
  size_t block;
  double time_s;
  double preference_hps;
  double actual_hps;
  double committed_hps;
  double difficulty;
  double expected_block_time_s;
} bm_series_point;

typedef struct bm_deviation_summary {
  double min_block_time_s;
  double max_block_time_s;
  double max_abs_deviation_s;
  double deviation_integral_s2;
  double deviation_duration_s;
} bm_deviation_summary;

typedef struct bm_series bm_series;

/* Defaults: ten equal miners on the two-week preference schedule. */
BM_API void bm_block_time_config_default(bm_daa daa, bm_block_time_config* out);
BM_API bm_status bm_block_time_run(const bm_block_time_config* config, bm_series** out);
BM_API void bm_series_destroy(bm_series* series);
BM_API size_t bm_series_size(const bm_series* series);
BM_API bm_status bm_series_point_at(const bm_series* series, size_t index, bm_series_point* out);
BM_API bm_status bm_series_summary(const bm_series* series, double tolerance, bm_deviation_summary* out);

/* ---- experiment harness ---- */

typedef struct bm_run_options {
  const char* config_path;
  const char* out_dir;     /* NULL: "out" */
  const char* blocks_path; /* validate input; NULL: from the config */
  int has_seed;
  uint64_t seed;
  size_t trials;           /* 0: config default */
  int full;                /* use the config's full trial count */
  unsigned threads;        /* 0: config default */
} bm_run_options;

/* Runs a harness subcommand ("table2", "fig3", "fig4", "fig5", "typeI",
 * "validate", "abandon-check", "simulate"), printing to stdout/stderr.
 * Returns the process exit code: 0 ok, 1 config, 2 data, 3 internal. */
BM_API int bm_run_command(const char* command, const bm_run_options* options);

#ifdef __cplusplus
}
#endif

#endif /* BONDSIM_BONDSIM_H */
