#include "bondsim/daa.hpp"

#include <algorithm>
#include <vector>

#include "bondsim/error.hpp"

namespace bondsim {

double bm_difficulty(double total_commitment_hps, double target_s) {
  if (!(total_commitment_hps > 0.0)) fail(ErrorCode::domain, "total commitment must be positive");
  if (!(target_s > 0.0)) fail(ErrorCode::domain, "target block time must be positive");
  return total_commitment_hps * target_s;
}

double cw144_clamped_timespan(double timespan_s, double target_s) {
  return std::max(72.0 * target_s, std::min(timespan_s, 288.0 * target_s));
}

double bch_difficulty(std::span<const WorkSample> window, double target_s) {
  if (window.empty()) fail(ErrorCode::domain, "cw-144 window is empty");
  if (!(target_s > 0.0)) fail(ErrorCode::domain, "target block time must be positive");
  double work = 0.0;
  double timespan = 0.0;
  for (const auto& s : window) {
    work += s.difficulty;
    timespan += s.block_time_s;
  }
  return target_s * work / cw144_clamped_timespan(timespan, target_s);
}

DaaKind parse_daa_kind(std::string_view key) {
  if (key == "bm") return DaaKind::bonded;
  if (key == "bch-cw144") return DaaKind::bch_cw144;
  fail(ErrorCode::config, "unknown daa key '" + std::string(key) + "' (expected bm | bch-cw144)");
}

std::string_view to_string(DaaKind kind) {
  return kind == DaaKind::bonded ? "bm" : "bch-cw144";
}

Cw144State::Cw144State(double genesis_difficulty, double target_s)
    : target_s_(target_s), difficulty_(genesis_difficulty) {
  if (!(genesis_difficulty > 0.0)) fail(ErrorCode::domain, "genesis difficulty must be positive");
  if (!(target_s > 0.0)) fail(ErrorCode::domain, "target block time must be positive");
  window_.assign(kCw144Window, WorkSample{genesis_difficulty, target_s});
}

void Cw144State::on_block(double block_time_s) {
  window_.pop_front();
  window_.push_back({difficulty_, block_time_s});
  const std::vector<WorkSample> flat(window_.begin(), window_.end());
  difficulty_ = bch_difficulty(flat, target_s_);
}

}  // namespace bondsim
