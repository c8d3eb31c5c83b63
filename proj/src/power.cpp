#include "pgrecruit/power.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <vector>

#include "pgrecruit/errors.hpp"
#include "pgrecruit/random.hpp"
#include "pgrecruit/special.hpp"

namespace pgrecruit
{
namespace
{

constexpr std::uint64_t kPowerStream = 0x706f776572ULL;

long draw_poisson(Engine& eng, double mean)
{
    if (!(mean > 0.0)) return 0;
    return std::poisson_distribution<long>(mean)(eng);
}

struct RunCounts
{
    long n1 = 0;
    long n2_h0 = 0;
    long n2_h1 = 0;
    std::vector<int> k1, k2_h0, k2_h1;  // Poisson-gamma kind only
};

// All draws of one run come from one engine keyed by the run index, in a
// fixed order, so results do not depend on the worker partition.
void draw_run(const PowerScenario& s, TestKind kind, long run, RunCounts& out)
{
    Engine eng(derive_seed(s.seed, kPowerStream, static_cast<std::uint64_t>(run)));
    if (kind != TestKind::poisson_gamma)
    {
        const double u1 = static_cast<double>(s.centres1) * s.length1;
        const double u2 = static_cast<double>(s.centres2) * s.length2;
        out.n1 = draw_poisson(eng, s.m1 * u1);
        out.n2_h0 = draw_poisson(eng, s.m1 * u2);
        out.n2_h1 = draw_poisson(eng, s.q * s.m1 * u2);
        return;
    }

    const double shape = *s.shape;
    std::gamma_distribution<double> gamma(shape, s.m1 / shape);
    const auto n = static_cast<std::size_t>(s.centres1);
    out.k1.resize(n);
    out.k2_h0.resize(n);
    out.k2_h1.resize(n);
    out.n1 = out.n2_h0 = out.n2_h1 = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const double lambda = gamma(eng);
        out.k1[i] = static_cast<int>(draw_poisson(eng, lambda * s.length1));
        out.k2_h0[i] = static_cast<int>(draw_poisson(eng, lambda * s.length2));
        out.k2_h1[i] = static_cast<int>(draw_poisson(eng, s.q * lambda * s.length2));
        out.n1 += out.k1[i];
        out.n2_h0 += out.k2_h0[i];
        out.n2_h1 += out.k2_h1[i];
    }
}

double poisson_statistic(const PowerScenario& s, TestKind kind, long n1, long n2)
{
    const double u1 = static_cast<double>(s.centres1) * s.length1;
    const double u2 = static_cast<double>(s.centres2) * s.length2;
    const double p = u1 / (u1 + u2);
    const long n = n1 + n2;
    if (kind == TestKind::poisson_nonparametric) return special::binomial_sf(n1, n, p);
    return special::poisson_sf(n1, static_cast<double>(n) * p);
}

double pg_statistic(const PowerScenario& s, const std::vector<int>& k1, const std::vector<int>& k2,
                    long n1, long n2)
{
    if (n1 + n2 == 0) return 1.0;
    EnrollmentData pooled;
    pooled.records.resize(k1.size());
    for (std::size_t i = 0; i < k1.size(); ++i)
    {
        pooled.records[i].count = k1[i] + k2[i];
        pooled.records[i].exposure = s.length1 + s.length2;
    }
    const double n = static_cast<double>(s.centres1);
    return pg_test(pooled, n1, n * s.length1, n * s.length1 * s.length1, s.delta).p_upper;
}

// Runs f(run, counts) over all runs, rethrowing the first exception.
template <typename F>
void for_each_run(const PowerScenario& s, TestKind kind, F&& f)
{
    std::exception_ptr failure;
    std::mutex failure_mutex;
    parallel_for(s.runs, s.workers, [&](long run) {
        try
        {
            RunCounts counts;
            draw_run(s, kind, run, counts);
            f(run, counts);
        }
        catch (...)
        {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
}

double mean_se(const Eigen::ArrayXd& x)
{
    const double n = static_cast<double>(x.size());
    if (n < 2.0) return 0.0;
    const double var = (x - x.mean()).square().sum() / (n - 1.0);
    return std::sqrt(var / n);
}

}  // namespace

PowerScenario PowerScenario::with_centres(long n) const
{
    PowerScenario s = *this;
    s.centres1 = n;
    s.centres2 = n;
    return s;
}

void validate(const PowerScenario& s, TestKind kind)
{
    if (!(s.m1 > 0.0)) throw DomainError("power scenario: m1 must be positive");
    if (!(s.q > 0.0 && s.q < 1.0)) throw DomainError("power scenario: q must lie in (0, 1)");
    if (!(s.length1 > 0.0) || !(s.length2 > 0.0))
    {
        throw DomainError("power scenario: interval lengths must be positive");
    }
    if (s.centres1 < 1 || s.centres2 < 1) throw DomainError("power scenario: need >= 1 centre");
    if (!(s.delta > 0.0 && s.delta < 0.5)) throw DomainError("power scenario: delta must lie in (0, 0.5)");
    if (s.runs < 1000) throw DomainError("power scenario: runs must be at least 1000");
    if (kind == TestKind::poisson_gamma)
    {
        if (!s.shape || !(*s.shape > 0.0))
        {
            throw DomainError("power scenario: Poisson-gamma test needs a positive gamma shape");
        }
        if (s.centres1 != s.centres2 || s.centres1 < 2)
        {
            throw DomainError("power scenario: Poisson-gamma test needs the same N >= 2 centres "
                              "in both intervals");
        }
    }
}

IntervalCounts simulate_interval_counts(const PowerScenario& s, TestKind kind)
{
    validate(s, kind);
    IntervalCounts out;
    out.n1.resize(s.runs);
    out.n2_h0.resize(s.runs);
    out.n2_h1.resize(s.runs);
    const bool per_centre = kind == TestKind::poisson_gamma;
    if (per_centre)
    {
        out.centre1.resize(s.runs, s.centres1);
        out.centre2_h0.resize(s.runs, s.centres1);
        out.centre2_h1.resize(s.runs, s.centres1);
    }
    for_each_run(s, kind, [&](long run, const RunCounts& c) {
        out.n1[run] = c.n1;
        out.n2_h0[run] = c.n2_h0;
        out.n2_h1[run] = c.n2_h1;
        if (!per_centre) return;
        for (Eigen::Index i = 0; i < s.centres1; ++i)
        {
            const auto j = static_cast<std::size_t>(i);
            out.centre1(run, i) = c.k1[j];
            out.centre2_h0(run, i) = c.k2_h0[j];
            out.centre2_h1(run, i) = c.k2_h1[j];
        }
    });
    return out;
}

StatisticSamples simulate_statistics(const PowerScenario& s, TestKind kind)
{
    validate(s, kind);
    StatisticSamples out;
    out.h0.resize(s.runs);
    out.h1.resize(s.runs);
    for_each_run(s, kind, [&](long run, const RunCounts& c) {
        if (kind == TestKind::poisson_gamma)
        {
            out.h0[run] = pg_statistic(s, c.k1, c.k2_h0, c.n1, c.n2_h0);
            out.h1[run] = pg_statistic(s, c.k1, c.k2_h1, c.n1, c.n2_h1);
        }
        else
        {
            out.h0[run] = poisson_statistic(s, kind, c.n1, c.n2_h0);
            out.h1[run] = poisson_statistic(s, kind, c.n1, c.n2_h1);
        }
    });
    return out;
}

double calibrate_threshold(const Eigen::ArrayXd& h0_samples, double delta)
{
    if (h0_samples.size() == 0) throw DomainError("calibration needs at least one H0 sample");
    std::vector<double> sorted(h0_samples.begin(), h0_samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double runs = static_cast<double>(sorted.size());
    const auto mass = [&](double t) {
        return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin())
               / runs;
    };
    if (mass(delta) <= delta) return delta;
    // Walk down the distinct sample values below delta.
    auto it = std::upper_bound(sorted.begin(), sorted.end(), delta);
    while (it != sorted.begin())
    {
        --it;
        const double v = *it;
        if (mass(v) <= delta) return v;
        it = std::lower_bound(sorted.begin(), it, v);
    }
    return std::nextafter(sorted.front(), -std::numeric_limits<double>::infinity());
}

double calibrate_threshold(const PowerScenario& s, TestKind kind)
{
    return calibrate_threshold(simulate_statistics(s, kind).h0, s.delta);
}

PowerResult estimate_power(const StatisticSamples& samples, double a_delta)
{
    const auto runs = samples.h1.size();
    if (runs == 0 || samples.h0.size() != runs) throw DomainError("power: empty or mismatched samples");
    PowerResult r;
    r.runs = static_cast<long>(runs);
    r.a_delta = a_delta;
    r.pvalue_h0 = samples.h0.mean();
    r.pvalue_h1 = samples.h1.mean();
    r.pvalue_h0_se = mean_se(samples.h0);
    r.pvalue_h1_se = mean_se(samples.h1);
    const double n = static_cast<double>(runs);
    r.power = static_cast<double>((samples.h1 <= a_delta).count()) / n;
    r.type1 = static_cast<double>((samples.h0 <= a_delta).count()) / n;
    r.power_se = std::sqrt(r.power * (1.0 - r.power) / n);
    return r;
}

PowerResult estimate_power(const PowerScenario& s, TestKind kind, double a_delta)
{
    return estimate_power(simulate_statistics(s, kind), a_delta);
}

PowerResult analyse_power(const PowerScenario& s, TestKind kind)
{
    const StatisticSamples samples = simulate_statistics(s, kind);
    return estimate_power(samples, calibrate_threshold(samples.h0, s.delta));
}

namespace
{

// Smallest N in [n_min, cap] satisfying `met`, assuming monotonicity:
// doubling bracket, then bisection.
template <typename Eval>
CentreSearch search_centres(long n_min, long cap, Eval&& eval)
{
    if (cap < n_min) throw DomainError("centre search: cap below the minimum centre count");
    std::map<long, std::pair<bool, PowerResult>> cache;
    const auto met = [&](long n) {
        auto it = cache.find(n);
        if (it == cache.end()) it = cache.emplace(n, eval(n)).first;
        return it->second.first;
    };

    long lo = n_min - 1;  // not met (or below range)
    long hi = n_min;
    while (!met(hi))
    {
        lo = hi;
        if (hi == cap) return {cap, false, cache.at(cap).second};
        hi = std::min(cap, hi * 2);
    }
    while (hi - lo > 1)
    {
        const long mid = lo + (hi - lo) / 2;
        if (met(mid))
            hi = mid;
        else
            lo = mid;
    }
    return {hi, true, cache.at(hi).second};
}

}  // namespace

CentreSearch min_centres_for_pvalue(const PowerScenario& base, TestKind kind, long max_centres)
{
    const long n_min = kind == TestKind::poisson_gamma ? 2 : 1;
    return search_centres(n_min, max_centres, [&](long n) {
        const PowerResult r = analyse_power(base.with_centres(n), kind);
        return std::make_pair(r.pvalue_h1 <= base.delta, r);
    });
}

CentreSearch min_centres_for_power(const PowerScenario& base, TestKind kind, double target_power,
                                   long max_centres)
{
    if (!(target_power > 0.0 && target_power < 1.0))
    {
        throw DomainError("target power must lie in (0, 1)");
    }
    const long n_min = kind == TestKind::poisson_gamma ? 2 : 1;
    return search_centres(n_min, max_centres, [&](long n) {
        const PowerResult r = analyse_power(base.with_centres(n), kind);
        return std::make_pair(r.power >= target_power, r);
    });
}

}  // namespace pgrecruit
