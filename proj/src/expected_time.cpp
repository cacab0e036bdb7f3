#include <algorithm>
#include <cmath>
#include <limits>

#include "bondsim/error.hpp"
#include "bondsim/sim.hpp"

namespace bondsim {

std::vector<PreferencePoint> default_preference_schedule() {
  return {{1, 0.100}, {2, 0.075}, {3, 0.225}, {4, 0.113}, {5, 0.225},
          {6, 0.281}, {7, 0.563}, {8, 0.422}, {9, 0.211}};
}

double preference_at(std::span<const PreferencePoint> schedule, double t_s) {
  if (schedule.empty()) fail(ErrorCode::config, "preference schedule is empty");
  const double day = t_s / kSecondsPerDay + 1.0;
  double fraction = schedule.front().fraction;
  for (const auto& p : schedule) {
    if (p.start_day <= day) fraction = p.fraction;
  }
  return fraction;
}

void ExpectedTimeConfig::check() const {
  require(target_s > 0.0, ErrorCode::config, "block-time sim: target_s must be positive");
  require(available_hps > 0.0, ErrorCode::config, "block-time sim: available_hps must be positive");
  require(kappa >= 0.0, ErrorCode::config, "block-time sim: kappa must be nonnegative");
  require(mu >= 1.0, ErrorCode::config, "block-time sim: mu must be at least 1");
  require(window_n >= 1, ErrorCode::config, "block-time sim: window_n must be positive");
  require(update_every >= 1, ErrorCode::config, "block-time sim: update_every must be positive");
  require(duration_s > 0.0, ErrorCode::config, "block-time sim: duration_s must be positive");
  for (const auto& m : miners) {
    require(m.share > 0.0, ErrorCode::config, "block-time sim: miner share must be positive");
    BehaviorModel probe;
    probe.kind = BehaviorKind::preference_follower;
    probe.preference_schedule = m.schedule;
    probe.check();
    require(!m.schedule.empty(), ErrorCode::config, "block-time sim: miner schedule is empty");
  }
}

namespace {

std::vector<FollowerMiner> effective_miners(const ExpectedTimeConfig& config) {
  if (!config.miners.empty()) return config.miners;
  return std::vector<FollowerMiner>(10, FollowerMiner{0.1, default_preference_schedule()});
}

struct BondedFollower {
  double commitment = 0.0;
  std::vector<double> history;  // one entry per block
};

}  // namespace

ExpectedTimeSeries run_expected_time_sim(const ExpectedTimeConfig& config) {
  config.check();
  const auto miners = effective_miners(config);
  const double T = config.target_s;

  auto preference_hps = [&](const FollowerMiner& m, double t) {
    return m.share * config.available_hps * preference_at(m.schedule, t);
  };

  ExpectedTimeSeries series;
  series.daa = config.daa;
  series.kappa = config.kappa;
  series.target_s = T;

  std::vector<BondedFollower> bonded(miners.size());
  double initial_total = 0.0;
  for (std::size_t m = 0; m < miners.size(); ++m) {
    const double c = preference_hps(miners[m], 0.0);
    bonded[m].commitment = c;
    bonded[m].history.assign(config.window_n, c);
    initial_total += c;
  }
  if (!(initial_total > 0.0)) fail(ErrorCode::config, "block-time sim: zero initial hash rate");
  Cw144State cw144(initial_total * T, T);

  double t = 0.0;
  for (std::size_t block = 0; t < config.duration_s; ++block) {
    double preference = 0.0;
    double actual = 0.0;
    double committed = 0.0;
    double difficulty = 0.0;

    if (config.daa == DaaKind::bonded) {
      const bool update = block % config.update_every == 0;
      for (std::size_t m = 0; m < miners.size(); ++m) {
        auto& b = bonded[m];
        const double pref = preference_hps(miners[m], t);
        if (update) {
          b.commitment = constrain_commitment(
              pref, std::span<const double>(b.history).last(config.window_n), config.mu);
        }
        b.history.push_back(b.commitment);
        const double lo = b.commitment * (1.0 - config.kappa);
        // The per-block cost is capped at b, so kappa >= 1 tolerates any rate.
        const double hi = config.kappa >= 1.0 ? std::numeric_limits<double>::infinity()
                                              : b.commitment * (1.0 + config.kappa);
        preference += pref;
        actual += std::clamp(pref, std::max(0.0, lo), hi);
        committed += b.commitment;
      }
      difficulty = bm_difficulty(committed, T);
    } else {
      for (const auto& m : miners) preference += preference_hps(m, t);
      actual = preference;
      committed = preference;
      difficulty = cw144.difficulty();
    }
    if (!(actual > 0.0)) fail(ErrorCode::config, "block-time sim: hash rate dropped to zero");

    const double expected = difficulty / actual;
    series.points.push_back({block, t, preference, actual, committed, difficulty, expected});
    if (config.daa == DaaKind::bch_cw144) cw144.on_block(expected);
    t += expected;
  }
  return series;
}

DeviationSummary ExpectedTimeSeries::summary(double tolerance) const {
  DeviationSummary s;
  if (points.empty()) return s;
  s.min_block_time_s = points.front().expected_block_time_s;
  s.max_block_time_s = s.min_block_time_s;
  for (const auto& p : points) {
    const double e = p.expected_block_time_s;
    const double dev = std::abs(e - target_s);
    s.min_block_time_s = std::min(s.min_block_time_s, e);
    s.max_block_time_s = std::max(s.max_block_time_s, e);
    s.max_abs_deviation_s = std::max(s.max_abs_deviation_s, dev);
    s.deviation_integral_s2 += dev * e;
    if (dev > tolerance * target_s) s.deviation_duration_s += e;
  }
  return s;
}

}  // namespace bondsim
