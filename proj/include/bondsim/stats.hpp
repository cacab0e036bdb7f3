#pragma once

#include <cstddef>
#include <span>

#include "bondsim/rng.hpp"

namespace bondsim {

/// Result of a one-sample Kolmogorov-Smirnov test against Expon(1).
struct KsOutcome {
  double delta = 0.0;      // sup |S_n(x) - F(x)|, in [0, 1]
  std::size_t n = 0;
  double p_value = 1.0;    // P(D_n >= delta) under the null
};

/// Quantile of the exponential distribution with the given mean:
/// -mean * ln(1 - p). Requires 0 <= p < 1 and mean > 0.
double exp_quantile(double p, double mean);

/// CDF of the exponential distribution with the given mean.
double exp_cdf(double x, double mean);

/// Inverse-transform draw from Expon(mean).
double exp_sample(double mean, RngStream& rng);

/// KS distance between the empirical distribution of `samples` and Expon(1).
/// Duplicates are allowed. Fills delta and n; p_value is left at 1.
KsOutcome ks_statistic(std::span<const double> samples);

/// Same statistic, for values already mapped through the Expon(1) CDF
/// (so against Uniform(0, 1)) and sorted ascending.
double ks_delta_sorted_uniform(std::span<const double> sorted_u);

/// Two-sided one-sample KS p-value P(D_n >= delta).
///
/// n <= 140 uses the exact null distribution (Marsaglia-Tsang-Wang); in the
/// far tail, and whenever delta >= 0.5, twice the exact one-sided Smirnov
/// tail is used instead, which avoids cancellation in 1 - cdf. Larger n
/// uses the asymptotic Kolmogorov series, which is conservative for finite
/// n. Results are clamped to [DBL_MIN, 1].
double ks_pvalue(double delta, std::size_t n);

/// Convenience: ks_statistic followed by ks_pvalue.
KsOutcome ks_test_expon1(std::span<const double> samples);

namespace detail {

// Exposed for tests.
inline constexpr std::size_t kExactMaxN = 140;
double ks_cdf_exact(double delta, std::size_t n);          // P(D_n < delta)
double smirnov_upper_tail(double delta, std::size_t n);    // P(D_n^+ >= delta)
double kolmogorov_upper_tail(double lambda);               // Q(lambda)

}  // namespace detail

}  // namespace bondsim
