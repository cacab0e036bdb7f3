#include "bondsim/stats.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <vector>

#include "bondsim/error.hpp"

namespace bondsim {

double exp_quantile(double p, double mean) {
  if (!(p >= 0.0 && p < 1.0)) fail(ErrorCode::domain, "exp_quantile: p must be in [0, 1)");
  if (!(mean > 0.0)) fail(ErrorCode::domain, "exp_quantile: mean must be positive");
  return -mean * std::log1p(-p);
}

double exp_cdf(double x, double mean) {
  if (!(mean > 0.0)) fail(ErrorCode::domain, "exp_cdf: mean must be positive");
  if (x <= 0.0) return 0.0;
  return -std::expm1(-x / mean);
}

double exp_sample(double mean, RngStream& rng) {
  if (!(mean > 0.0)) fail(ErrorCode::domain, "exp_sample: mean must be positive");
  return -mean * std::log1p(-rng.uniform());
}

double ks_delta_sorted_uniform(std::span<const double> sorted_u) {
  const double n = static_cast<double>(sorted_u.size());
  double delta = 0.0;
  for (std::size_t i = 0; i < sorted_u.size(); ++i) {
    const double u = sorted_u[i];
    const double above = static_cast<double>(i + 1) / n - u;
    const double below = u - static_cast<double>(i) / n;
    delta = std::max(delta, std::max(above, below));
  }
  return std::min(delta, 1.0);
}

KsOutcome ks_statistic(std::span<const double> samples) {
  if (samples.empty()) fail(ErrorCode::domain, "ks_statistic: empty sample");
  std::vector<double> u;
  u.reserve(samples.size());
  for (double x : samples) {
    if (!(x >= 0.0)) fail(ErrorCode::domain, "ks_statistic: samples must be nonnegative");
    u.push_back(-std::expm1(-x));
  }
  std::sort(u.begin(), u.end());
  KsOutcome out;
  out.n = samples.size();
  out.delta = ks_delta_sorted_uniform(u);
  return out;
}

KsOutcome ks_test_expon1(std::span<const double> samples) {
  KsOutcome out = ks_statistic(samples);
  out.p_value = ks_pvalue(out.delta, out.n);
  return out;
}

namespace detail {
namespace {

// Dense row-major square matrix with a decimal exponent carried separately;
// the matrix power in the exact KS cdf overflows doubles otherwise.
struct ScaledMatrix {
  std::size_t m = 0;
  std::vector<double> a;
  int exponent = 0;
};

ScaledMatrix multiply(const ScaledMatrix& x, const ScaledMatrix& y) {
  const std::size_t m = x.m;
  ScaledMatrix z{m, std::vector<double>(m * m, 0.0), x.exponent + y.exponent};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const double xik = x.a[i * m + k];
      if (xik == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) z.a[i * m + j] += xik * y.a[k * m + j];
    }
  }
  return z;
}

void rescale(ScaledMatrix& z, std::size_t centre) {
  if (z.a[centre * z.m + centre] > 1e140) {
    for (double& v : z.a) v *= 1e-140;
    z.exponent += 140;
  }
}

ScaledMatrix power(const ScaledMatrix& base, std::size_t n, std::size_t centre) {
  if (n == 1) return base;
  ScaledMatrix half = power(base, n / 2, centre);
  ScaledMatrix result = multiply(half, half);
  if (n % 2 == 1) result = multiply(base, result);
  rescale(result, centre);
  return result;
}

}  // namespace

// Marsaglia, Tsang & Wang (2003): P(D_n < d) as a scaled entry of H^n.
double ks_cdf_exact(double delta, std::size_t n) {
  if (delta <= 0.0) return 0.0;
  if (delta >= 1.0) return 1.0;
  const double nd = static_cast<double>(n) * delta;
  const std::size_t k = static_cast<std::size_t>(nd) + 1;
  const std::size_t m = 2 * k - 1;
  const double h = static_cast<double>(k) - nd;

  ScaledMatrix hm{m, std::vector<double>(m * m, 0.0), 0};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      hm.a[i * m + j] = (i + 1 >= j) ? 1.0 : 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    hm.a[i * m] -= std::pow(h, static_cast<double>(i + 1));
    hm.a[(m - 1) * m + i] -= std::pow(h, static_cast<double>(m - i));
  }
  if (2.0 * h - 1.0 > 0.0) hm.a[(m - 1) * m] += std::pow(2.0 * h - 1.0, static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i + 1 >= j) {
        for (std::size_t g = 1; g <= i + 1 - j; ++g) hm.a[i * m + j] /= static_cast<double>(g);
      }
    }
  }

  const std::size_t centre = k - 1;
  ScaledMatrix q = power(hm, n, centre);
  double s = q.a[centre * m + centre];
  int exponent = q.exponent;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 1; i <= n; ++i) {
    s = s * static_cast<double>(i) / dn;
    if (s < 1e-140) {
      s *= 1e140;
      exponent -= 140;
    }
  }
  return std::clamp(s * std::pow(10.0, exponent), 0.0, 1.0);
}

// Smirnov / Birnbaum-Tingey exact formula for the one-sided statistic, summed
// in log space; every term is positive, so the tail keeps full relative
// precision down to the underflow limit.
double smirnov_upper_tail(double delta, std::size_t n) {
  if (delta <= 0.0) return 1.0;
  if (delta >= 1.0) return 0.0;
  const double dn = static_cast<double>(n);
  const auto jmax = static_cast<std::size_t>(std::floor(dn * (1.0 - delta)));
  std::vector<double> logs;
  logs.reserve(jmax + 1);
  const double lg_n1 = std::lgamma(dn + 1.0);
  for (std::size_t j = 0; j <= jmax; ++j) {
    const double dj = static_cast<double>(j);
    const double a = 1.0 - delta - dj / dn;
    if (a <= 0.0) continue;
    const double log_choose = lg_n1 - std::lgamma(dj + 1.0) - std::lgamma(dn - dj + 1.0);
    logs.push_back(log_choose + (dn - dj) * std::log(a) +
                   (dj - 1.0) * std::log(delta + dj / dn));
  }
  if (logs.empty()) return 0.0;
  const double peak = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - peak);
  return std::min(1.0, delta * std::exp(peak) * sum);
}

// Q(lambda) = P(K >= lambda) for the Kolmogorov distribution.
double kolmogorov_upper_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double kPi = 3.14159265358979323846;
  if (lambda < 1.18) {
    // Jacobi theta form of the cdf converges fast for small lambda.
    const double y = -kPi * kPi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k <= 10; ++k) {
      const double odd = 2.0 * k - 1.0;
      cdf += std::exp(odd * odd * y);
    }
    cdf *= std::sqrt(2.0 * kPi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-300 || term < 1e-17 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace detail

double ks_pvalue(double delta, std::size_t n) {
  if (n == 0) fail(ErrorCode::domain, "ks_pvalue: n must be positive");
  if (!(delta >= 0.0 && delta <= 1.0)) fail(ErrorCode::domain, "ks_pvalue: delta must be in [0, 1]");
  if (delta == 0.0) return 1.0;

  double p;
  if (n <= detail::kExactMaxN) {
    const double tail = 2.0 * detail::smirnov_upper_tail(delta, n);
    if (delta >= 0.5 || tail < 1e-4) {
      p = tail;  // exact for delta >= 0.5; otherwise within ~tail^2 of exact
    } else {
      p = 1.0 - detail::ks_cdf_exact(delta, n);
    }
  } else {
    p = detail::kolmogorov_upper_tail(std::sqrt(static_cast<double>(n)) * delta);
  }
  return std::clamp(p, DBL_MIN, 1.0);
}

}  // namespace bondsim
