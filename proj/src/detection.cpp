#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "bondsim/error.hpp"
#include "bondsim/rng.hpp"
#include "bondsim/sim.hpp"
#include "bondsim/stats.hpp"

namespace bondsim {

std::string_view to_string(BehaviorKind kind) {
  switch (kind) {
    case BehaviorKind::honest_random_walk: return "honest";
    case BehaviorKind::short_range_dishonest: return "short-range";
    case BehaviorKind::long_range_dishonest: return "long-range";
    case BehaviorKind::preference_follower: return "preference";
  }
  return "?";
}

BehaviorKind parse_behavior_kind(std::string_view key) {
  for (auto k : {BehaviorKind::honest_random_walk, BehaviorKind::short_range_dishonest,
                 BehaviorKind::long_range_dishonest, BehaviorKind::preference_follower}) {
    if (to_string(k) == key) return k;
  }
  fail(ErrorCode::config, "unknown behavior '" + std::string(key) +
                              "' (expected honest | short-range | long-range | preference)");
}

void BehaviorModel::check() const {
  require(walk_sd >= 0.0, ErrorCode::config, "behavior: walk_sd must be nonnegative");
  require(drop_factor >= 0.0, ErrorCode::config, "behavior: drop_factor must be nonnegative");
  require(!drop_duration_s || *drop_duration_s > 0.0, ErrorCode::config,
          "behavior: drop_duration_s must be positive");
  require(kappa >= 0.0, ErrorCode::config, "behavior: kappa must be nonnegative");
  for (std::size_t i = 0; i < preference_schedule.size(); ++i) {
    require(preference_schedule[i].fraction >= 0.0, ErrorCode::config,
            "behavior: preference fractions must be nonnegative");
    require(i == 0 || preference_schedule[i].start_day > preference_schedule[i - 1].start_day,
            ErrorCode::config, "behavior: schedule days must strictly increase");
  }
}

void DetectionConfig::check() const {
  require(attacker_fraction >= kMinSupportedFraction && attacker_fraction <= 1.0,
          ErrorCode::config, "detection: attacker_fraction must lie in [0.005, 1]");
  require(trials >= 1, ErrorCode::config, "detection: trials must be at least 1");
  require(target_s > 0.0, ErrorCode::config, "detection: target_s must be positive");
  require(network_hps > 0.0, ErrorCode::config, "detection: network_hps must be positive");
  require(duration_s >= 0.0, ErrorCode::config, "detection: duration_s must be nonnegative");
  require(abandon_p > 0.0 && abandon_p < 1.0, ErrorCode::config,
          "detection: abandon_p must lie in (0, 1)");
  require(behavior.kind != BehaviorKind::preference_follower, ErrorCode::config,
          "detection: the preference-follower model belongs to the block-time simulation");
  behavior.check();
  params.check();
}

std::optional<double> TrialResult::first_detection_s() const {
  if (first_failure_s && abandoned_s) return std::min(*first_failure_s, *abandoned_s);
  return first_failure_s ? first_failure_s : abandoned_s;
}

bool TrialResult::detected_in_bootstrap() const {
  if (bootstrap_valid) return !*bootstrap_valid;
  return abandoned_s.has_value();
}

std::optional<double> TrialResult::detection_delay_s() const {
  const auto first = first_detection_s();
  if (!first) return std::nullopt;
  if (!bootstrap_end_s) return 0.0;
  return std::max(0.0, *first - *bootstrap_end_s);
}

namespace {

// State of the observed miner between two of its blocks.
struct OpenInterval {
  double start_s = 0.0;
  double hashes = 0.0;            // integral of the actual rate
  double undropped_hashes = 0.0;  // integral of the rate without a drop episode
  double difficulty_time = 0.0;   // integral of network difficulty
};

}  // namespace

TrialResult run_detection_trial(const DetectionConfig& config, std::uint64_t trial_index) {
  config.check();
  const auto& model = config.behavior;
  const auto& params = config.params;
  const double q = config.attacker_fraction;
  const double c0 = q * config.network_hps;
  const double background = (1.0 - q) * config.network_hps;
  const double step_sd = model.walk_sd * c0;
  const bool long_range = model.kind == BehaviorKind::long_range_dishonest;
  const bool drops = model.kind == BehaviorKind::short_range_dishonest ||
                     (model.kind == BehaviorKind::honest_random_walk && model.honest_drops);
  const bool hides_drop = model.kind == BehaviorKind::short_range_dishonest;

  // Bounds runaway trials where the walk parks the miner at zero.
  const double expected_bootstrap_s = static_cast<double>(params.n_long) * config.target_s / q;
  const double hard_stop_s = 50.0 * expected_bootstrap_s + config.duration_s;

  RngStream rng(config.seed, trial_index);
  SlidingValidity window(params);
  TrialResult result;
  result.trial_index = trial_index;

  double walk = c0;          // underlying hash rate
  double commitment = c0;    // commitment in force for the open interval
  double t = 0.0;
  std::size_t k = 0;         // attacker blocks so far
  std::optional<double> drop_start;
  OpenInterval open;

  while (t < hard_stop_s) {
    if (result.bootstrap_end_s && t > *result.bootstrap_end_s + config.duration_s) break;

    // Drop episodes cover the last n_short blocks of every n_long-block span.
    bool dropped = false;
    if (drops && (k % params.n_long) >= params.n_long - params.n_short) {
      if (!drop_start) drop_start = open.start_s;
      dropped = !model.drop_duration_s || (t - *drop_start) < *model.drop_duration_s;
    } else {
      drop_start.reset();
    }

    const double actual = dropped ? walk * model.drop_factor : walk;
    const double difficulty = bm_difficulty(background + commitment, config.target_s);
    const double total_rate = background + actual;
    if (!(total_rate > 0.0)) break;  // nobody mines any more

    const double dt = exp_sample(difficulty / total_rate, rng);
    const bool attacker_wins = rng.uniform() * total_rate < actual;

    // Silence longer than the commitment's abandonment quantile burns the bond.
    if (config.abandonment && commitment > 0.0) {
      const double limit = open.start_s + exp_quantile(config.abandon_p,
                                                       difficulty / commitment);
      if (t + dt > limit) {
        result.abandoned_s = limit;
        t = limit;
        break;
      }
    }
    t += dt;
    ++result.network_blocks;
    open.hashes += actual * dt;
    open.undropped_hashes += walk * dt;
    open.difficulty_time += difficulty * dt;
    walk = std::max(0.0, walk + rng.normal(0.0, step_sd));

    if (!attacker_wins) continue;

    ++k;
    const double interval = t - open.start_s;
    const double avg_difficulty = open.difficulty_time / interval;
    double report;
    if (long_range) {
      report = c0;
    } else if (hides_drop) {
      report = open.undropped_hashes / interval;
    } else {
      report = open.hashes / interval;
    }
    const double next_commitment = long_range ? c0 : walk;

    window.push(ReportedInterval{interval, report, avg_difficulty});
    if (config.record_blocks) {
      BlockRecord b;
      b.height = result.network_blocks;
      b.miner = 1;
      b.timestamp_s = t;
      b.inter_arrival_s = interval;
      b.report_hps = report;
      b.next_commitment_hps = next_commitment;
      b.avg_difficulty = avg_difficulty;
      result.blocks.push_back(b);
    }
    commitment = next_commitment;
    open = OpenInterval{t, 0.0, 0.0, 0.0};

    if (window.ready()) {
      const bool pass = window.passes();
      ++result.windows_tested;
      if (config.record_windows) result.windows.push_back({k, t, pass});
      if (k == params.n_long) {
        result.bootstrap_end_s = t;
        result.bootstrap_valid = pass;
      }
      if (!pass) {
        ++result.failures;
        if (!result.first_failure_s) result.first_failure_s = t;
        if (config.stop_at_first_failure) break;
      }
      if (config.bootstrap_only) break;
    }
  }
  result.attacker_blocks = k;
  result.end_time_s = t;
  return result;
}

std::vector<TrialResult> run_detection_trials(const DetectionConfig& config) {
  config.check();
  std::vector<TrialResult> results(config.trials);
  unsigned workers = config.threads ? config.threads : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(config.trials)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < config.trials; i = next++) {
      try {
        results[i] = run_detection_trial(config, i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return results;
}

std::vector<double> detection_curve(std::span<const TrialResult> trials,
                                    std::span<const double> grid_s) {
  if (trials.empty()) fail(ErrorCode::domain, "detection_curve: no trials");
  std::vector<double> delays;
  for (const auto& tr : trials) {
    if (auto d = tr.detection_delay_s()) delays.push_back(*d);
  }
  std::sort(delays.begin(), delays.end());
  std::vector<double> curve;
  curve.reserve(grid_s.size());
  const double n = static_cast<double>(trials.size());
  for (double g : grid_s) {
    const auto hits = std::upper_bound(delays.begin(), delays.end(), g) - delays.begin();
    curve.push_back(static_cast<double>(hits) / n);
  }
  return curve;
}

double bootstrap_detection_rate(std::span<const TrialResult> trials) {
  if (trials.empty()) fail(ErrorCode::domain, "bootstrap_detection_rate: no trials");
  std::size_t failed = 0;
  for (const auto& tr : trials) {
    if (tr.detected_in_bootstrap()) ++failed;
  }
  return static_cast<double>(failed) / static_cast<double>(trials.size());
}

}  // namespace bondsim
