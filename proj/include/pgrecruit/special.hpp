#pragma once

// Special functions and discrete tail probabilities used by the distribution,
// test and power modules. Everything is evaluated in double precision with
// log-space prefactors; both tails are returned where cancellation matters.

namespace pgrecruit::special
{

/// ln Gamma(x) for x > 0. Thread-safe (does not touch signgam).
double log_gamma(double x);

/// ln Gamma(a + b) - ln Gamma(a) for a > 0, b >= 0, accurate when a >> b.
double log_gamma_ratio(double a, double b);

/// ln k!
double log_factorial(long k);

struct TailPair
{
    double lower;  ///< lower-tail probability
    double upper;  ///< complementary upper tail, computed without 1 - lower
};

/// Regularized incomplete beta I_x(a, b) and its complement. `y` must equal
/// 1 - x; passing it separately keeps precision when x is close to 1.
TailPair incomplete_beta(double a, double b, double x, double y);

/// Regularized incomplete gamma P(a, x) and Q(a, x).
TailPair incomplete_gamma(double a, double x);

double normal_cdf(double z);

/// Standard normal quantile; |error| below 1e-14 on (1e-300, 1 - 1e-16).
double normal_quantile(double p);

/// P(Poisson(mean) <= k)
double poisson_cdf(long k, double mean);
/// P(Poisson(mean) >= k)
double poisson_sf(long k, double mean);

/// P(Bin(n, p) <= k)
double binomial_cdf(long k, long n, double p);
/// P(Bin(n, p) >= k)
double binomial_sf(long k, long n, double p);

}  // namespace pgrecruit::special
