#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bondsim/daa.hpp"
#include "bondsim/protocol.hpp"
#include "bondsim/validity.hpp"

namespace bondsim {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kSecondsPerYear = 365.0 * kSecondsPerDay;

enum class BehaviorKind {
  honest_random_walk,
  short_range_dishonest,
  long_range_dishonest,
  preference_follower,
};

std::string_view to_string(BehaviorKind kind);
BehaviorKind parse_behavior_kind(std::string_view key);

/// Preference in force from `start_day` (1-based, Day 1 starts at t = 0)
/// until the next point, as a fraction of the miner's available hash rate.
struct PreferencePoint {
  double start_day = 1.0;
  double fraction = 0.0;
};

/// The two-week schedule used for the block-time comparison.
std::vector<PreferencePoint> default_preference_schedule();

/// Fraction in force at time `t_s` (seconds since the start of Day 1).
double preference_at(std::span<const PreferencePoint> schedule, double t_s);

struct BehaviorModel {
  BehaviorKind kind = BehaviorKind::honest_random_walk;
  double walk_sd = 0.01;      // per network block, fraction of the initial commitment
  double drop_factor = 0.2;   // actual / committed rate during a short-range episode
  std::optional<double> drop_duration_s;  // optional cap on an episode; none = n_s blocks
  bool honest_drops = false;  // honest model only: drop like the short-range model, but report it
  std::vector<PreferencePoint> preference_schedule;
  double kappa = 0.25;        // cost tolerance, fraction of b

  void check() const;
};

struct DetectionConfig {
  double attacker_fraction = 0.01;
  BehaviorModel behavior;
  double duration_s = kSecondsPerYear;  // simulated time after bootstrap ends
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  double target_s = 600.0;
  double network_hps = 1e15;
  ValidityParams params{2, 100, 1e-7, 1e-7};
  bool bootstrap_only = false;        // stop once the bootstrap window is tested
  bool stop_at_first_failure = true;
  bool record_blocks = false;         // keep the attacker's block series
  bool record_windows = false;        // keep every window verdict
  bool abandonment = false;           // end the trial when the miner falls silent too long
  double abandon_p = 0.99999;
  unsigned threads = 0;               // 0 = hardware concurrency

  void check() const;
};

struct WindowOutcome {
  std::size_t block_index = 0;  // attacker block closing the window (1-based)
  double time_s = 0.0;
  bool valid = true;
};

struct TrialResult {
  std::uint64_t trial_index = 0;
  std::optional<double> bootstrap_end_s;   // time of the n_l-th attacker block
  std::optional<bool> bootstrap_valid;
  std::optional<double> first_failure_s;   // absolute simulation time
  std::optional<double> abandoned_s;       // silence exceeded the abandonment quantile
  std::size_t windows_tested = 0;
  std::size_t failures = 0;
  std::size_t attacker_blocks = 0;
  std::size_t network_blocks = 0;
  double end_time_s = 0.0;
  std::vector<WindowOutcome> windows;
  std::vector<BlockRecord> blocks;

  /// Time the protocol first penalized the miner: a failed window or abandonment.
  std::optional<double> first_detection_s() const;
  bool detected() const { return first_detection_s().has_value(); }
  /// Detected before or at the bootstrap-window test.
  bool detected_in_bootstrap() const;
  /// First detection relative to the end of bootstrapping (0 if earlier).
  std::optional<double> detection_delay_s() const;
};

/// One seeded trial. The stream for trial i is RngStream(seed, i), so a trial
/// reproduces bit-for-bit regardless of how trials are scheduled.
TrialResult run_detection_trial(const DetectionConfig& config, std::uint64_t trial_index);

/// All trials of a config, fanned out over worker threads, ordered by index.
std::vector<TrialResult> run_detection_trials(const DetectionConfig& config);

/// Fraction of trials first detected at or before each grid time (seconds
/// after bootstrap end). Non-decreasing in the grid.
std::vector<double> detection_curve(std::span<const TrialResult> trials,
                                    std::span<const double> grid_s);

/// Fraction of trials detected by the end of the bootstrap window.
double bootstrap_detection_rate(std::span<const TrialResult> trials);

// ---------------------------------------------------------------------------
// deterministic expected-block-time simulation

struct FollowerMiner {
  double share = 0.1;  // fraction of the network's total available hash rate
  std::vector<PreferencePoint> schedule;
};

struct ExpectedTimeConfig {
  DaaKind daa = DaaKind::bonded;
  double target_s = 600.0;
  double available_hps = 1e15;
  std::vector<FollowerMiner> miners;  // empty = ten 10% miners on the default schedule
  double kappa = 0.25;
  double mu = 2.0;
  std::size_t window_n = 1000;        // commitments averaged by the mu constraint
  std::size_t update_every = 10;      // blocks between commitment updates
  double duration_s = 14.0 * kSecondsPerDay;
  double deviation_tolerance = 0.01;  // |E - T| / T counted as "deviating"

  void check() const;
};

struct ExpectedTimePoint {
  std::size_t block = 0;
  double time_s = 0.0;
  double preference_hps = 0.0;
  double actual_hps = 0.0;
  double committed_hps = 0.0;
  double difficulty = 0.0;
  double expected_block_time_s = 0.0;
};

struct DeviationSummary {
  double min_block_time_s = 0.0;
  double max_block_time_s = 0.0;
  double max_abs_deviation_s = 0.0;
  double deviation_integral_s2 = 0.0;  // integral of |E - T| over simulated time
  double deviation_duration_s = 0.0;   // time spent outside the tolerance band
};

struct ExpectedTimeSeries {
  DaaKind daa = DaaKind::bonded;
  double kappa = 0.0;
  double target_s = 600.0;
  std::vector<ExpectedTimePoint> points;

  DeviationSummary summary(double tolerance = 0.01) const;
};

ExpectedTimeSeries run_expected_time_sim(const ExpectedTimeConfig& config);

}  // namespace bondsim
