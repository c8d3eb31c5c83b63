#include "pgrecruit/homogeneity.hpp"

#include <cmath>
#include <map>

#include "pgrecruit/errors.hpp"
#include "pgrecruit/special.hpp"

namespace pgrecruit
{
namespace
{

void check_level(double delta)
{
    if (!(delta > 0.0 && delta < 0.5)) throw DomainError("test level must lie in (0, 0.5)");
}

// Pooled share p = U1 / (U1 + U2); throws when either interval has no exposure.
double exposure_share(const IntervalData& d1, const IntervalData& d2)
{
    if (!(d1.exposure > 0.0) || !(d2.exposure > 0.0))
    {
        throw DomainError("homogeneity test: both intervals need positive recruitment windows");
    }
    if (d1.n < 0 || d2.n < 0) throw DomainError("homogeneity test: negative count");
    return d1.exposure / (d1.exposure + d2.exposure);
}

TestReport make_report(TestKind kind, double p_upper, double p_lower, double delta)
{
    TestReport r;
    r.kind = kind;
    r.p_upper = p_upper;
    r.p_lower = p_lower;
    r.delta = delta;
    r.verdict = decide(p_upper, p_lower, delta);
    return r;
}

void check_rates(double q, double m1, double window_days, double delta)
{
    if (!(q > 0.0 && q < 1.0)) throw DomainError("rate ratio q must lie in (0, 1)");
    if (!(m1 > 0.0) || !(window_days > 0.0))
    {
        throw DomainError("rate and interval length must be positive");
    }
    check_level(delta);
}

}  // namespace

std::string to_string(TestKind kind)
{
    switch (kind)
    {
    case TestKind::poisson_nonparametric: return "poisson-nonparametric";
    case TestKind::poisson_parametric: return "poisson-parametric";
    case TestKind::poisson_gamma: return "poisson-gamma";
    }
    return "unknown";
}

std::string to_string(Verdict verdict)
{
    switch (verdict)
    {
    case Verdict::rate_decreased: return "rate-decreased";
    case Verdict::rate_increased: return "rate-increased";
    case Verdict::no_evidence: return "no-evidence";
    }
    return "unknown";
}

Verdict decide(double p_upper, double p_lower, double delta)
{
    if (p_upper <= delta) return Verdict::rate_decreased;
    if (p_lower <= delta) return Verdict::rate_increased;
    return Verdict::no_evidence;
}

IntervalData interval_totals(const std::vector<CentreEvents>& centres, double a, double b)
{
    if (!(a < b)) throw DomainError("interval start must precede its end");
    IntervalData d;
    d.start = a;
    d.end = b;
    for (const auto& c : centres)
    {
        const double v = recruitment_window(a, b, c.activation_day);
        if (v <= 0.0) continue;
        const long k = count_events(c, a, b);
        d.per_centre.push_back({c.id, k, v});
        d.n += k;
        d.exposure += v;
    }
    return d;
}

IntervalData interval_totals(long n, double exposure)
{
    if (n < 0 || !(exposure >= 0.0)) throw DomainError("interval totals must be nonnegative");
    if (exposure == 0.0 && n > 0) throw DomainError("events recorded without exposure");
    IntervalData d;
    d.n = n;
    d.exposure = exposure;
    return d;
}

TestReport poisson_nonparametric_test(const IntervalData& d1, const IntervalData& d2, double delta)
{
    check_level(delta);
    const double p = exposure_share(d1, d2);
    const long n = d1.n + d2.n;
    return make_report(TestKind::poisson_nonparametric, special::binomial_sf(d1.n, n, p),
                       special::binomial_cdf(d1.n, n, p), delta);
}

TestReport poisson_parametric_test(const IntervalData& d1, const IntervalData& d2, double delta)
{
    check_level(delta);
    const double p = exposure_share(d1, d2);
    const double mean = static_cast<double>(d1.n + d2.n) * p;
    return make_report(TestKind::poisson_parametric, special::poisson_sf(d1.n, mean),
                       special::poisson_cdf(d1.n, mean), delta);
}

TestReport pg_test(const EnrollmentData& union_data, long n1, double window_sum,
                   double window_square_sum, double delta, const FitOptions& options)
{
    check_level(delta);
    if (!(window_sum > 0.0) || !(window_square_sum > 0.0))
    {
        throw DomainError("PG test: interval 1 has no active centres");
    }
    FitResult fit = fit_pg(union_data, options);
    const double mean = fit.mean_rate() * window_sum;
    const double variance = fit.rate_variance() * window_square_sum;
    const PGParams params{mean * mean / variance, mean / variance};
    TestReport r = make_report(TestKind::poisson_gamma, pg_sf(n1, params), pg_cdf(n1, params),
                               delta);
    r.fit = std::move(fit);
    return r;
}

TestReport pg_test(const IntervalData& d1, const IntervalData& d2, double delta,
                   const FitOptions& options)
{
    if (d1.per_centre.empty() || d2.per_centre.empty())
    {
        throw DomainError("PG test needs per-centre data in both intervals");
    }
    std::map<std::string, EnrollmentRecord> pooled;
    for (const auto* d : {&d1, &d2})
    {
        for (const auto& c : d->per_centre)
        {
            auto& rec = pooled[c.id];
            rec.centre_id = c.id;
            rec.count += c.count;
            rec.exposure += c.window;
        }
    }
    EnrollmentData union_data;
    for (auto& [id, rec] : pooled) union_data.records.push_back(std::move(rec));

    double v_sum = 0.0, v2_sum = 0.0;
    for (const auto& c : d1.per_centre)
    {
        v_sum += c.window;
        v2_sum += c.window * c.window;
    }
    return pg_test(union_data, d1.n, v_sum, v2_sum, delta, options);
}

double required_centres_value(double q, double m1, double window_days, double delta, TestKind kind)
{
    check_rates(q, m1, window_days, delta);
    double coefficient = 0.0;
    switch (kind)
    {
    case TestKind::poisson_nonparametric: coefficient = 2.0; break;
    case TestKind::poisson_parametric: coefficient = 3.0; break;
    case TestKind::poisson_gamma:
        throw DomainError("no closed-form centre count for the Poisson-gamma test");
    }
    const double z = special::normal_quantile(delta);
    return coefficient * z * z / (m1 * window_days) * (1.0 + q) / ((1.0 - q) * (1.0 - q));
}

long required_centres_nonparam(double q, double m1, double window_days, double delta)
{
    return static_cast<long>(
        std::ceil(required_centres_value(q, m1, window_days, delta, TestKind::poisson_nonparametric)));
}

long required_centres_param(double q, double m1, double window_days, double delta)
{
    return static_cast<long>(
        std::ceil(required_centres_value(q, m1, window_days, delta, TestKind::poisson_parametric)));
}

StatisticMoments statistic_moments(double m1, double m2, double u1, double u2, TestKind kind)
{
    if (!(m1 >= 0.0) || !(m2 >= 0.0) || !(u1 > 0.0) || !(u2 > 0.0))
    {
        throw DomainError("statistic moments: rates must be >= 0 and windows positive");
    }
    const double u = u1 + u2;
    const double h = u1 * u2 / u;
    StatisticMoments out{h * (m2 - m1), 0.0};
    switch (kind)
    {
    case TestKind::poisson_nonparametric: out.variance = h * (m1 + m2); break;
    case TestKind::poisson_parametric:
        out.variance =
            (m1 * u1 * (u1 * u + u2 * u2) + m2 * u1 * u2 * (2.0 * u1 + u2)) / (u * u);
        break;
    case TestKind::poisson_gamma:
        throw DomainError("statistic moments are defined for the Poisson tests only");
    }
    return out;
}

double normal_approx_pupp(double m1, double m2, double u1, double u2, TestKind kind)
{
    if (!(m1 > 0.0) || !(m2 > 0.0)) throw DomainError("normal approximation: rates must be positive");
    const StatisticMoments x = statistic_moments(m1, m2, u1, u2, kind);
    return special::normal_cdf(x.mean / std::sqrt(x.variance));
}

}  // namespace pgrecruit
