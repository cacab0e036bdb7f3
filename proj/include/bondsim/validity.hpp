#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "bondsim/stats.hpp"

namespace bondsim {

/// One inter-block interval of a single miner, as recorded on chain.
struct ReportedInterval {
  double inter_arrival_s = 0.0;  // time since the miner's previous block
  double reported_hps = 0.0;     // attested average hash rate over the interval
  double avg_difficulty = 0.0;   // time-weighted network difficulty (hashes)
};

/// Window sizes and thresholds of the composite validity test.
struct ValidityParams {
  std::size_t n_short = 0;
  std::size_t n_long = 0;
  double tau_short = 0.0;
  double tau_long = 0.0;

  /// Throws ErrorCode::config unless 1 <= n_short < n_long and both
  /// thresholds lie strictly inside (0, 1).
  void check() const;

  friend bool operator==(const ValidityParams&, const ValidityParams&) = default;
};

/// A row of the parameter policy: applies to commitments at or above
/// `min_fraction` of the network hash rate, up to the next row.
struct ParamsRow {
  double min_fraction;
  ValidityParams params;
};

/// Smallest commitment fraction the test can serve (n_s would drop below 1).
inline constexpr double kMinSupportedFraction = 0.005;

std::span<const ParamsRow> params_table();

/// Policy lookup: the row with the largest min_fraction <= commit_fraction;
/// fractions in [0.005, 0.01) use the 1% row.
ValidityParams params_for(double commit_fraction);

/// X = T * r / D_hat. Expon(1) when the report is honest.
double x_statistic(const ReportedInterval& interval);
std::vector<double> transform(std::span<const ReportedInterval> intervals);

/// KS outcome (with p-value) over the most recent `n` intervals.
KsOutcome ks_window(std::span<const ReportedInterval> intervals, std::size_t n);

/// 1 iff the p-value over the most recent `n` intervals exceeds `tau`.
/// Fewer than `n` intervals is an insufficient-data error, never a pass.
bool ks_test(std::span<const ReportedInterval> intervals, std::size_t n, double tau);

struct ValidityVerdict {
  KsOutcome short_test;
  KsOutcome long_test;
  bool short_pass = false;
  bool long_pass = false;
  bool valid() const noexcept { return short_pass && long_pass; }
};

ValidityVerdict evaluate_valid(std::span<const ReportedInterval> intervals,
                               const ValidityParams& params);

bool valid(std::span<const ReportedInterval> intervals, const ValidityParams& params);

/// Largest-delta boundary for a KS test at (n, tau): deltas at or below
/// `pass_below` certainly pass, deltas at or above `fail_from` certainly fail.
struct KsCritical {
  double pass_below = 0.0;
  double fail_from = 1.0;
};
KsCritical ks_critical(std::size_t n, double tau);

/// Incremental evaluation of the validity test over a sliding window of the
/// most recent n_long X values. Each push is O(n_long); the verdict matches
/// evaluate_valid() on the same trailing intervals exactly.
class SlidingValidity {
 public:
  explicit SlidingValidity(const ValidityParams& params);

  void push(double x);
  void push(const ReportedInterval& interval) { push(x_statistic(interval)); }

  std::size_t size() const noexcept { return long_.size(); }
  bool ready() const noexcept { return long_.full(); }
  const ValidityParams& params() const noexcept { return params_; }

  /// Full verdict with p-values. Requires ready().
  ValidityVerdict evaluate() const;

  /// Pass/fail only, using precomputed critical deltas; p-values are
  /// computed only for deltas inside the (tiny) ambiguous band.
  bool passes() const;

 private:
  class Window {
   public:
    explicit Window(std::size_t capacity) : capacity_(capacity) {}
    void push(double u);
    bool full() const noexcept { return order_.size() == capacity_; }
    std::size_t size() const noexcept { return order_.size(); }
    double delta() const { return ks_delta_sorted_uniform(sorted_); }

   private:
    std::size_t capacity_;
    std::deque<double> order_;
    std::vector<double> sorted_;
  };

  bool window_passes(const Window& w, std::size_t n, double tau, const KsCritical& crit) const;

  ValidityParams params_;
  KsCritical crit_short_;
  KsCritical crit_long_;
  Window short_;
  Window long_;
};

}  // namespace bondsim
