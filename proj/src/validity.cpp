#include "bondsim/validity.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "bondsim/error.hpp"

namespace bondsim {

void ValidityParams::check() const {
  require(n_short >= 1 && n_short < n_long, ErrorCode::config,
          "validity params: need 1 <= n_short < n_long");
  require(tau_short > 0.0 && tau_short < 1.0 && tau_long > 0.0 && tau_long < 1.0,
          ErrorCode::config, "validity params: thresholds must lie in (0, 1)");
}

std::span<const ParamsRow> params_table() {
  static constexpr std::array<ParamsRow, 4> kRows{{
      {0.01, {2, 100, 1e-7, 1e-7}},
      {0.10, {20, 1000, 1e-10, 1e-10}},
      {0.25, {50, 2500, 1e-12, 1e-12}},
      {0.50, {100, 5000, 1e-12, 1e-12}},
  }};
  return kRows;
}

ValidityParams params_for(double commit_fraction) {
  if (!(commit_fraction >= kMinSupportedFraction)) {
    fail(ErrorCode::unsupported_hash_rate,
         "commitments below 0.5% of the network hash rate are not supported");
  }
  if (commit_fraction > 1.0) fail(ErrorCode::domain, "commit fraction exceeds 1");
  const auto rows = params_table();
  ValidityParams chosen = rows.front().params;
  for (const auto& row : rows) {
    if (row.min_fraction <= commit_fraction) chosen = row.params;
  }
  return chosen;
}

double x_statistic(const ReportedInterval& interval) {
  if (!(interval.avg_difficulty > 0.0)) fail(ErrorCode::domain, "average difficulty must be positive");
  if (!(interval.inter_arrival_s > 0.0)) fail(ErrorCode::domain, "inter-arrival time must be positive");
  if (!(interval.reported_hps >= 0.0)) fail(ErrorCode::domain, "reported hash rate must be nonnegative");
  return interval.inter_arrival_s * interval.reported_hps / interval.avg_difficulty;
}

std::vector<double> transform(std::span<const ReportedInterval> intervals) {
  if (intervals.empty()) fail(ErrorCode::domain, "transform: no intervals");
  std::vector<double> xs;
  xs.reserve(intervals.size());
  for (const auto& iv : intervals) xs.push_back(x_statistic(iv));
  return xs;
}

KsOutcome ks_window(std::span<const ReportedInterval> intervals, std::size_t n) {
  if (n == 0) fail(ErrorCode::domain, "ks window size must be positive");
  if (intervals.size() < n) fail(ErrorCode::insufficient_data, "fewer intervals than the KS window");
  return ks_test_expon1(transform(intervals.last(n)));
}

bool ks_test(std::span<const ReportedInterval> intervals, std::size_t n, double tau) {
  return ks_window(intervals, n).p_value > tau;
}

ValidityVerdict evaluate_valid(std::span<const ReportedInterval> intervals,
                               const ValidityParams& params) {
  params.check();
  if (intervals.size() < params.n_long) {
    fail(ErrorCode::insufficient_data, "fewer intervals than the long validity window");
  }
  ValidityVerdict v;
  v.short_test = ks_window(intervals, params.n_short);
  v.long_test = ks_window(intervals, params.n_long);
  v.short_pass = v.short_test.p_value > params.tau_short;
  v.long_pass = v.long_test.p_value > params.tau_long;
  return v;
}

bool valid(std::span<const ReportedInterval> intervals, const ValidityParams& params) {
  return evaluate_valid(intervals, params).valid();
}

KsCritical ks_critical(std::size_t n, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorCode::domain, "ks_critical: tau must lie in (0, 1)");
  double lo = 0.0;  // p(lo) > tau
  double hi = 1.0;  // p(hi) <= tau
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (ks_pvalue(mid, n) > tau) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, hi};
}

SlidingValidity::SlidingValidity(const ValidityParams& params)
    : params_(params),
      crit_short_((params.check(), ks_critical(params.n_short, params.tau_short))),
      crit_long_(ks_critical(params.n_long, params.tau_long)),
      short_(params.n_short),
      long_(params.n_long) {}

void SlidingValidity::Window::push(double u) {
  if (order_.size() == capacity_) {
    const double old = order_.front();
    order_.pop_front();
    sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), old));
  }
  order_.push_back(u);
  sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), u), u);
}

void SlidingValidity::push(double x) {
  if (!(x >= 0.0)) fail(ErrorCode::domain, "X statistic must be nonnegative");
  const double u = -std::expm1(-x);
  short_.push(u);
  long_.push(u);
}

ValidityVerdict SlidingValidity::evaluate() const {
  if (!ready()) fail(ErrorCode::insufficient_data, "fewer intervals than the long validity window");
  ValidityVerdict v;
  v.short_test = {short_.delta(), params_.n_short, 1.0};
  v.short_test.p_value = ks_pvalue(v.short_test.delta, params_.n_short);
  v.long_test = {long_.delta(), params_.n_long, 1.0};
  v.long_test.p_value = ks_pvalue(v.long_test.delta, params_.n_long);
  v.short_pass = v.short_test.p_value > params_.tau_short;
  v.long_pass = v.long_test.p_value > params_.tau_long;
  return v;
}

bool SlidingValidity::window_passes(const Window& w, std::size_t n, double tau,
                                    const KsCritical& crit) const {
  const double d = w.delta();
  if (d <= crit.pass_below) return true;
  if (d >= crit.fail_from) return false;
  return ks_pvalue(d, n) > tau;
}

bool SlidingValidity::passes() const {
  if (!ready()) fail(ErrorCode::insufficient_data, "fewer intervals than the long validity window");
  return window_passes(short_, params_.n_short, params_.tau_short, crit_short_) &&
         window_passes(long_, params_.n_long, params_.tau_long, crit_long_);
}

}  // namespace bondsim
