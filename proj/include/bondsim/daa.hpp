#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <string_view>

namespace bondsim {

/// Proactive rule: difficulty (expected hashes per block) is the total
/// committed hash rate times the target block time.
double bm_difficulty(double total_commitment_hps, double target_s);

/// One block of the cw-144 rolling window.
struct WorkSample {
  double difficulty = 0.0;  // expected hashes
  double block_time_s = 0.0;
};

inline constexpr std::size_t kCw144Window = 144;

/// Clamped timespan of the cw-144 rule: max(72 T, min(M, 288 T)).
double cw144_clamped_timespan(double timespan_s, double target_s);

/// Reactive baseline: T * (sum of difficulty) / M' over the window, where M'
/// is the clamped sum of block times. Requires a non-empty window; callers
/// supply exactly 144 entries in normal operation.
double bch_difficulty(std::span<const WorkSample> window, double target_s);

enum class DaaKind { bonded, bch_cw144 };

/// Parses the config key: "bm" or "bch-cw144".
DaaKind parse_daa_kind(std::string_view key);
std::string_view to_string(DaaKind kind);

/// Rolling state for the cw-144 baseline. The window is pre-filled with
/// 144 copies of the genesis (difficulty, target time) pair.
class Cw144State {
 public:
  Cw144State(double genesis_difficulty, double target_s);

  double difficulty() const noexcept { return difficulty_; }
  const std::deque<WorkSample>& window() const noexcept { return window_; }

  /// Records the block just mined at the current difficulty and recomputes
  /// the difficulty for the next block.
  void on_block(double block_time_s);

 private:
  double target_s_;
  double difficulty_;
  std::deque<WorkSample> window_;
};

}  // namespace bondsim
