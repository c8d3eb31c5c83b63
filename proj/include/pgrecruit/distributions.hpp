#pragma once

#include <Eigen/Core>

namespace pgrecruit
{

/// Gamma rate-distribution parameters (shape A, rate B). Used both for a
/// single centre's Ga(alpha, beta) and for the PG approximation of a sum.
struct PGParams
{
    double shape = 1.0;
    double rate = 1.0;

    double mean() const { return shape / rate; }
    double variance() const { return shape / (rate * rate); }
};

/// Mean and variance of a cumulative rate Lambda (not of the count).
/// variance == 0 means the count is plain Poisson(mean).
struct MomentPair
{
    double mean = 0.0;
    double variance = 0.0;
};

/// Throws DomainError unless shape > 0 and rate > 0.
void validate(const PGParams& params);

/// ln P(PG(t, shape, rate) = k)
double pg_log_pmf(long k, double t, double shape, double rate);

/// P(PG(t, shape, rate) = k), the negative binomial with size `shape` and
/// success probability rate / (rate + t).
double pg_pmf(long k, double t, double shape, double rate);

/// pmf values for k = 0..kmax
Eigen::ArrayXd pg_pmf_table(long kmax, double t, const PGParams& params);

/// P(PG(exposure, shape, rate) <= k)
double pg_cdf(long k, const PGParams& params, double exposure = 1.0);

/// P(PG(exposure, shape, rate) >= k), computed without cancellation.
double pg_sf(long k, const PGParams& params, double exposure = 1.0);

/// Smallest k with P(PG(A, B) <= k) >= p where A = mean^2/variance and
/// B = mean/variance. Falls back to the Poisson quantile when variance == 0.
long pg_quantile(double p, const MomentPair& moments);

/// Smallest k with P(Poisson(mean) <= k) >= p.
long poisson_quantile(double p, double mean);

}  // namespace pgrecruit
