#include "pgrecruit/special.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <math.h>

#include "pgrecruit/errors.hpp"

namespace pgrecruit::special
{
namespace
{

constexpr double kEpsilon = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIterations = 1'000'000;
constexpr double kStirlingThreshold = 1e4;

constexpr std::size_t kFactorialTableSize = 1024;

const std::array<double, kFactorialTableSize>& factorial_table()
{
    static const auto table = [] {
        std::array<double, kFactorialTableSize> t{};
        t[0] = 0.0;
        for (std::size_t k = 1; k < t.size(); ++k)
        {
            t[k] = t[k - 1] + std::log(static_cast<double>(k));
        }
        return t;
    }();
    return table;
}

// Tail of the Stirling series for ln Gamma(z), z >= 1e4.
double stirling_correction(double z)
{
    const double z2 = z * z;
    return 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2);
}

double log_beta(double a, double b)
{
    if (a >= b)
    {
        return log_gamma(b) - log_gamma_ratio(a, b);
    }
    return log_gamma(a) - log_gamma_ratio(b, a);
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x)
{
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m)
    {
        const double dm = m;
        const double m2 = 2.0 * dm;
        double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEpsilon) return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double log_gamma(double x)
{
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

double log_gamma_ratio(double a, double b)
{
    if (b == 0.0) return 0.0;
    if (b <= 64.0 && b == std::floor(b))
    {
        double sum = 0.0;
        for (int j = 0; j < static_cast<int>(b); ++j)
        {
            sum += std::log(a + j);
        }
        return sum;
    }
    if (a >= kStirlingThreshold)
    {
        const double ab = a + b;
        return (a - 0.5) * std::log1p(b / a) + b * std::log(ab) - b + stirling_correction(ab)
               - stirling_correction(a);
    }
    return log_gamma(a + b) - log_gamma(a);
}

double log_factorial(long k)
{
    if (k < 0) throw DomainError("log_factorial: negative argument");
    if (static_cast<std::size_t>(k) < kFactorialTableSize)
    {
        return factorial_table()[static_cast<std::size_t>(k)];
    }
    return log_gamma(static_cast<double>(k) + 1.0);
}

TailPair incomplete_beta(double a, double b, double x, double y)
{
    if (!(a > 0.0) || !(b > 0.0))
    {
        throw DomainError("incomplete_beta: shape parameters must be positive");
    }
    if (x <= 0.0) return {0.0, 1.0};
    if (y <= 0.0) return {1.0, 0.0};

    const double log_x = x < 0.5 ? std::log(x) : std::log1p(-y);
    const double log_y = y < 0.5 ? std::log(y) : std::log1p(-x);
    const double log_front = a * log_x + b * log_y - log_beta(a, b);

    if (x < (a + 1.0) / (a + b + 2.0))
    {
        const double lower = std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
        return {lower, 1.0 - lower};
    }
    const double upper = std::exp(log_front) * beta_continued_fraction(b, a, y) / b;
    return {1.0 - upper, upper};
}

TailPair incomplete_gamma(double a, double x)
{
    if (!(a > 0.0)) throw DomainError("incomplete_gamma: shape must be positive");
    if (x <= 0.0) return {0.0, 1.0};

    const double log_front = a * std::log(x) - x - log_gamma(a);
    if (x < a + 1.0)
    {
        double ap = a;
        double del = 1.0 / a;
        double sum = del;
        for (int n = 0; n < kMaxIterations; ++n)
        {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * kEpsilon)
            {
                const double lower = sum * std::exp(log_front);
                return {lower, 1.0 - lower};
            }
        }
        throw NumericError("incomplete gamma series did not converge");
    }

    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIterations; ++i)
    {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEpsilon)
        {
            const double upper = std::exp(log_front) * h;
            return {1.0 - upper, upper};
        }
    }
    throw NumericError("incomplete gamma continued fraction did not converge");
}

double normal_cdf(double z)
{
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");

    // Acklam's rational approximation followed by one Halley step.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x = 0.0;
    if (p < p_low)
    {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    else if (p <= 1.0 - p_low)
    {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    else
    {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Phi(x) - p, written through the upper tail when p is close to 1.
    const double e = p < 0.5 ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

double poisson_cdf(long k, double mean)
{
    if (mean < 0.0) throw DomainError("poisson_cdf: negative mean");
    if (k < 0) return 0.0;
    if (mean == 0.0) return 1.0;
    return incomplete_gamma(static_cast<double>(k) + 1.0, mean).upper;
}

double poisson_sf(long k, double mean)
{
    if (mean < 0.0) throw DomainError("poisson_sf: negative mean");
    if (k <= 0) return 1.0;
    if (mean == 0.0) return 0.0;
    return incomplete_gamma(static_cast<double>(k), mean).lower;
}

double binomial_cdf(long k, long n, double p)
{
    if (n < 0 || !(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_cdf: invalid parameters");
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;
    return incomplete_beta(static_cast<double>(k) + 1.0, static_cast<double>(n - k), p, 1.0 - p)
        .upper;
}

double binomial_sf(long k, long n, double p)
{
    if (n < 0 || !(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_sf: invalid parameters");
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    return incomplete_beta(static_cast<double>(k), static_cast<double>(n - k) + 1.0, p, 1.0 - p)
        .lower;
}

}  // namespace pgrecruit::special
