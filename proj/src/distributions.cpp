#include "pgrecruit/distributions.hpp"

#include <cmath>
#include <limits>

#include "pgrecruit/errors.hpp"
#include "pgrecruit/special.hpp"

namespace pgrecruit
{
namespace
{

// Beyond this shape the negative binomial is indistinguishable from its
// Poisson limit in double precision for the counts we evaluate.
constexpr double kPoissonLimitShape = 1e10;

void validate_exposure(double t)
{
    if (!(t > 0.0) || !std::isfinite(t))
    {
        throw DomainError("exposure must be positive and finite");
    }
}

// Smallest k >= 0 with cdf(k) >= p, searching outward from `start` with a
// doubling bracket and finishing with bisection.
template <typename Cdf>
long discrete_quantile(double p, long start, Cdf&& cdf)
{
    long lo = -1;  // cdf(lo) < p, with cdf(-1) = 0
    long hi = 0;   // cdf(hi) >= p
    start = std::max(0L, start);
    if (cdf(start) >= p)
    {
        hi = start;
        long step = 1;
        lo = hi - step;
        while (lo >= 0 && cdf(lo) >= p)
        {
            hi = lo;
            step *= 2;
            lo = hi - step;
        }
        lo = std::max(lo, -1L);
    }
    else
    {
        lo = start;
        long step = 1;
        hi = lo + step;
        while (cdf(hi) < p)
        {
            lo = hi;
            step *= 2;
            hi = lo + step;
        }
    }
    while (hi - lo > 1)
    {
        const long mid = lo + (hi - lo) / 2;
        if (cdf(mid) >= p)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

}  // namespace

void validate(const PGParams& params)
{
    if (!(params.shape > 0.0) || !(params.rate > 0.0) || !std::isfinite(params.shape)
        || !std::isfinite(params.rate))
    {
        throw DomainError("gamma parameters must be positive and finite");
    }
}

double pg_log_pmf(long k, double t, double shape, double rate)
{
    validate({shape, rate});
    validate_exposure(t);
    if (k < 0) return -std::numeric_limits<double>::infinity();
    const double kd = static_cast<double>(k);
    // ln p and ln(1 - p) for p = rate / (rate + t)
    const double log_p = -std::log1p(t / rate);
    const double log_q = -std::log1p(rate / t);
    return special::log_gamma_ratio(shape, kd) - special::log_factorial(k) + shape * log_p
           + kd * log_q;
}

double pg_pmf(long k, double t, double shape, double rate)
{
    return std::exp(pg_log_pmf(k, t, shape, rate));
}

Eigen::ArrayXd pg_pmf_table(long kmax, double t, const PGParams& params)
{
    Eigen::ArrayXd table(kmax + 1);
    for (long k = 0; k <= kmax; ++k)
    {
        table[k] = pg_pmf(k, t, params.shape, params.rate);
    }
    return table;
}

double pg_cdf(long k, const PGParams& params, double exposure)
{
    validate(params);
    validate_exposure(exposure);
    if (k < 0) return 0.0;
    if (params.shape > kPoissonLimitShape)
    {
        return special::poisson_cdf(k, params.mean() * exposure);
    }
    const double p = params.rate / (params.rate + exposure);
    const double q = exposure / (params.rate + exposure);
    return special::incomplete_beta(params.shape, static_cast<double>(k) + 1.0, p, q).lower;
}

double pg_sf(long k, const PGParams& params, double exposure)
{
    validate(params);
    validate_exposure(exposure);
    if (k <= 0) return 1.0;
    if (params.shape > kPoissonLimitShape)
    {
        return special::poisson_sf(k, params.mean() * exposure);
    }
    const double p = params.rate / (params.rate + exposure);
    const double q = exposure / (params.rate + exposure);
    return special::incomplete_beta(params.shape, static_cast<double>(k), p, q).upper;
}

long poisson_quantile(double p, double mean)
{
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("Poisson mean must be >= 0");
    if (mean == 0.0) return 0;
    return discrete_quantile(p, static_cast<long>(std::floor(mean)),
                             [&](long k) { return special::poisson_cdf(k, mean); });
}

long pg_quantile(double p, const MomentPair& moments)
{
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
    if (!(moments.mean > 0.0) || !std::isfinite(moments.mean))
    {
        throw DomainError("pg_quantile: mean must be positive");
    }
    if (!(moments.variance >= 0.0)) throw DomainError("pg_quantile: negative variance");
    if (moments.variance == 0.0) return poisson_quantile(p, moments.mean);

    const PGParams params{moments.mean * moments.mean / moments.variance,
                          moments.mean / moments.variance};
    const long mode = params.shape > 1.0
                          ? static_cast<long>(std::floor((params.shape - 1.0) / params.rate))
                          : 0L;
    return discrete_quantile(p, mode, [&](long k) { return pg_cdf(k, params, 1.0); });
}

}  // namespace pgrecruit
