#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "bondsim/error.hpp"
#include "bondsim/rng.hpp"
#include "bondsim/stats.hpp"

using namespace bondsim;

namespace {

struct Reference {
  std::size_t n;
  double delta;
  double sf;  // P(D_n >= delta), scipy.stats.kstwo.sf
};

// Frozen from scipy 1.x (kstwo.sf), an independent implementation.
const Reference kExactTable[] = {
    {1, 0.3, 1.0},
    {1, 0.75, 0.5},
    {2, 0.3, 0.98},
    {2, 0.6, 0.32},
    {2, 0.9, 0.02},
    {2, 0.9998, 7.9999999999982373e-08},
    {5, 0.2, 0.9616},
    {5, 0.5, 0.112},
    {10, 0.1, 0.99963712000000005},
    {10, 0.3, 0.27053557479999946},
    {10, 0.6, 0.00056816720000000035},
    {20, 0.15, 0.70446715494428724},
    {20, 0.35, 0.010754963444389309},
    {50, 0.1, 0.66231127046581861},
    {50, 0.25, 0.0030657620198697444},
    {100, 0.05, 0.95321597106357248},
    {100, 0.12, 0.10330374901819871},
    {100, 0.2, 0.00055519273279887749},
    {100, 0.3, 1.7719869892662917e-08},
    {140, 0.08, 0.31480749911643063},
    {140, 0.2, 2.1981563302200222e-05},
    {140, 0.35, 7.7707989177612656e-16},
};

const Reference kLargeTable[] = {
    {500, 0.03, 0.74731667004570212},
    {500, 0.06, 0.052434634890262233},
    {500, 0.13, 7.9268339140142902e-08},
    {1000, 0.09, 1.6911775984434787e-07},
    {5000, 0.02, 0.036139413953256372},
    {5000, 0.05, 2.6523052328711187e-11},
};

std::vector<double> draw_expon(RngStream& rng, std::size_t n, double mean = 1.0) {
  std::vector<double> x(n);
  for (auto& v : x) v = exp_sample(mean, rng);
  return x;
}

// Direct transcription of the sup-distance definition, used as an oracle.
double brute_force_delta(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = 1.0 - std::exp(-x[i]);
    d = std::max({d, std::abs((i + 1) / n - f), std::abs(i / n - f)});
  }
  return d;
}

}  // namespace

TEST(ExpQuantile, Examples) {
  EXPECT_EQ(exp_quantile(0.0, 600.0), 0.0);
  EXPECT_NEAR(exp_quantile(1.0 - std::exp(-1.0), 1.0), 1.0, 1e-12);
  const double q = exp_quantile(0.99999, 6000.0);
  EXPECT_NEAR(q, 69077.55, 0.1);
  EXPECT_LT(q / 3600.0, 20.0);
}

TEST(ExpQuantile, RoundTripWithCdf) {
  for (double p = 0.0; p < 0.9999; p += 0.0137) {
    for (double mean : {0.5, 1.0, 600.0, 6e4}) {
      const double x = exp_quantile(p, mean);
      EXPECT_NEAR(exp_cdf(x, mean), p, 1e-12 * std::max(p, 1e-300) + 1e-15);
    }
  }
}

TEST(ExpQuantile, DomainErrors) {
  EXPECT_THROW(exp_quantile(1.0, 1.0), Error);
  EXPECT_THROW(exp_quantile(-0.1, 1.0), Error);
  EXPECT_THROW(exp_quantile(0.5, 0.0), Error);
  RngStream rng(1, 0);
  EXPECT_THROW(exp_sample(-1.0, rng), Error);
}

TEST(ExpSample, MeanAndDeterminism) {
  RngStream rng(42, 0);
  double sum = 0.0;
  const int draws = 1'000'000;
  for (int i = 0; i < draws; ++i) sum += exp_sample(1.0, rng);
  EXPECT_NEAR(sum / draws, 1.0, 0.01);

  RngStream a(7, 3), b(7, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(exp_sample(600.0, a), exp_sample(600.0, b));
}

TEST(ExpSample, EmpiricalCdfMatches) {
  RngStream rng(5, 1);
  const auto x = draw_expon(rng, 100'000, 3.0);
  std::vector<double> scaled(x.size());
  std::transform(x.begin(), x.end(), scaled.begin(), [](double v) { return v / 3.0; });
  EXPECT_LT(ks_statistic(scaled).delta, 0.01);
}

TEST(KsStatistic, SinglePoint) {
  const double x[] = {std::log(2.0)};
  const auto r = ks_statistic(x);
  EXPECT_NEAR(r.delta, 0.5, 1e-15);
  EXPECT_EQ(r.n, 1u);
}

TEST(KsStatistic, QuantileGrid) {
  std::vector<double> x;
  for (int i = 1; i <= 100; ++i) x.push_back(exp_quantile((i - 0.5) / 100.0, 1.0));
  EXPECT_NEAR(ks_statistic(x).delta, 0.005, 1e-12);
}

TEST(KsStatistic, MatchesDefinitionWithTies) {
  RngStream rng(11, 0);
  for (int trial = 0; trial < 200; ++trial) {
    auto x = draw_expon(rng, 1 + trial % 37);
    if (trial % 3 == 0 && x.size() > 2) x[1] = x[0];  // duplicates are legal
    EXPECT_NEAR(ks_statistic(x).delta, brute_force_delta(x), 1e-14);
  }
}

TEST(KsStatistic, EmptyIsDomainError) {
  std::vector<double> empty;
  try {
    ks_statistic(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::domain);
  }
}

TEST(KsStatistic, CriticalValueAt500) {
  // Two-sided 5% critical value is about 1.358 / sqrt(n).
  RngStream rng(21, 0);
  const int trials = 10'000;
  int above = 0;
  const double crit = 1.358 / std::sqrt(500.0);
  for (int t = 0; t < trials; ++t) {
    if (ks_statistic(draw_expon(rng, 500)).delta >= crit) ++above;
  }
  const double rate = static_cast<double>(above) / trials;
  EXPECT_NEAR(rate, 0.05, 3.0 * std::sqrt(0.05 * 0.95 / trials) + 0.003);
}

TEST(KsPvalue, ExactBranchMatchesReference) {
  for (const auto& r : kExactTable) {
    const double p = ks_pvalue(r.delta, r.n);
    EXPECT_NEAR(p, r.sf, 1e-9 * r.sf + 1e-15) << "n=" << r.n << " d=" << r.delta;
  }
}

TEST(KsPvalue, LargeNIsConservativeAndClose) {
  for (const auto& r : kLargeTable) {
    const double p = ks_pvalue(r.delta, r.n);
    EXPECT_GE(p, r.sf) << "n=" << r.n << " d=" << r.delta;
    EXPECT_LT(p, 1.35 * r.sf) << "n=" << r.n << " d=" << r.delta;
  }
}

TEST(KsPvalue, ExactForOneSample) {
  // D_1 = max(U, 1 - U): P(D_1 >= d) = 1 for d <= 1/2, 2(1 - d) above.
  for (double d = 0.0; d <= 1.0; d += 0.01) {
    const double expected = d <= 0.5 ? 1.0 : 2.0 * (1.0 - d);
    EXPECT_NEAR(ks_pvalue(d, 1), std::max(expected, 0.0), 1e-12) << d;
  }
  EXPECT_EQ(ks_pvalue(0.5, 1), 1.0);
}

TEST(KsPvalue, ZeroDeltaIsOne) {
  for (std::size_t n : {1u, 2u, 100u, 141u, 5000u}) EXPECT_EQ(ks_pvalue(0.0, n), 1.0);
}

TEST(KsPvalue, MonteCarloOracle) {
  // Null distribution of D_n simulated from uniforms, compared at moderate deltas.
  RngStream rng(99, 0);
  struct Case { std::size_t n; double d; };
  const Case cases[] = {{1, 0.7}, {2, 0.55}, {10, 0.3}, {100, 0.1}, {200, 0.08}};
  const int draws = 200'000;
  for (const auto& c : cases) {
    int hits = 0;
    std::vector<double> u(c.n);
    for (int t = 0; t < draws; ++t) {
      for (auto& v : u) v = rng.uniform();
      std::sort(u.begin(), u.end());
      if (ks_delta_sorted_uniform(u) >= c.d) ++hits;
    }
    const double mc = static_cast<double>(hits) / draws;
    const double p = ks_pvalue(c.d, c.n);
    const double sigma = std::sqrt(p * (1 - p) / draws);
    if (c.n <= detail::kExactMaxN) {
      EXPECT_NEAR(mc, p, 4 * sigma + 1e-4) << "n=" << c.n;
    } else {
      EXPECT_LE(mc, p + 4 * sigma) << "n=" << c.n;  // conservative branch
      EXPECT_NEAR(mc, p, 0.15 * p) << "n=" << c.n;
    }
  }
}

TEST(KsPvalue, MonotoneInDelta) {
  for (std::size_t n : {1u, 2u, 3u, 20u, 100u, 140u, 141u, 1000u, 5000u}) {
    double prev = 1.0;
    for (double d = 0.0; d <= 1.0; d += 0.0025) {
      const double p = ks_pvalue(d, n);
      EXPECT_LE(p, prev + 1e-12) << "n=" << n << " d=" << d;
      EXPECT_GT(p, 0.0);
      prev = p;
    }
  }
}

TEST(KsPvalue, DomainErrors) {
  EXPECT_THROW(ks_pvalue(-0.1, 10), Error);
  EXPECT_THROW(ks_pvalue(1.1, 10), Error);
  EXPECT_THROW(ks_pvalue(0.2, 0), Error);
}

TEST(KsPvalue, KolmogorovSeriesKnownValue) {
  EXPECT_NEAR(detail::kolmogorov_upper_tail(1.0), 0.26999967167735456, 1e-12);
  EXPECT_NEAR(detail::kolmogorov_upper_tail(1.358), 0.0500, 5e-4);
}

TEST(KsPvalue, SmirnovOneSample) {
  for (double d : {0.1, 0.4, 0.9}) EXPECT_NEAR(detail::smirnov_upper_tail(d, 1), 1.0 - d, 1e-14);
}

TEST(KsPvalue, CalibratedForHonestSamples) {
  for (std::size_t m : {2u, 100u, 500u}) {
    RngStream rng(1234, m);
    const int trials = 1000;
    std::vector<double> p(trials);
    for (auto& v : p) v = ks_test_expon1(draw_expon(rng, m)).p_value;
    for (double x = 0.01; x < 0.995; x += 0.01) {
      const double below =
          static_cast<double>(std::count_if(p.begin(), p.end(), [&](double v) { return v < x; })) /
          trials;
      EXPECT_LE(below, x + 3.0 * std::sqrt(x * (1 - x) / trials)) << "m=" << m << " x=" << x;
    }
  }
}

TEST(RngStream, StreamsAreIndependentAndDerivable) {
  RngStream a(1, 0), b(1, 1);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) equal += a.uniform() == b.uniform();
  EXPECT_EQ(equal, 0);

  RngStream parent(3, 4);
  auto c1 = parent.derive(9);
  parent.uniform();
  auto c2 = parent.derive(9);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(c1.uniform(), c2.uniform());
}
