#include "pgrecruit/forecast.hpp"

#include <cmath>

#include "pgrecruit/errors.hpp"

namespace pgrecruit
{

MomentPair region_moments(const std::vector<CentreProfile>& centres, const RateSchedule& schedule,
                          double from, double to)
{
    if (centres.empty()) throw DomainError("region moments: no centres");
    MomentPair out;
    for (const auto& c : centres)
    {
        const double big_r =
            cumulative_rate_factor(schedule.for_group(c.group), from, to, c.activation_day);
        out.mean += c.mean_rate() * big_r;
        out.variance += c.rate_variance() * big_r * big_r;
    }
    return out;
}

MomentPair region_moments(const std::vector<CentreProfile>& centres, const RateSchedule& schedule,
                          double t)
{
    return region_moments(centres, schedule, 0.0, t);
}

PGParams pg_approx_params(const MomentPair& moments)
{
    if (!(moments.mean > 0.0)) throw DomainError("PG approximation: mean must be positive");
    if (!(moments.variance > 0.0))
    {
        throw DomainError("PG approximation: degenerate moments (zero variance)");
    }
    return {moments.mean * moments.mean / moments.variance, moments.mean / moments.variance};
}

Bounds predictive_bounds(const MomentPair& moments, double confidence)
{
    if (!(confidence > 0.0 && confidence < 1.0))
    {
        throw DomainError("confidence must lie in (0, 1)");
    }
    if (moments.mean <= 0.0) return {};
    return {pg_quantile(0.5 * (1.0 - confidence), moments),
            pg_quantile(0.5 * (1.0 + confidence), moments)};
}

void RegionForecast::shift(long observed)
{
    mean += static_cast<double>(observed);
    lower += observed;
    upper += observed;
}

RegionForecast forecast_from_moments(const Eigen::ArrayXd& grid,
                                     const std::vector<MomentPair>& moments, double confidence)
{
    if (static_cast<std::size_t>(grid.size()) != moments.size())
    {
        throw DomainError("forecast: grid and moment lengths differ");
    }
    RegionForecast f;
    const Eigen::Index n = grid.size();
    f.times = grid;
    f.mean.resize(n);
    f.variance.resize(n);
    f.lower.resize(n);
    f.upper.resize(n);
    f.confidence = confidence;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const auto& m = moments[static_cast<std::size_t>(i)];
        const Bounds b = predictive_bounds(m, confidence);
        f.mean[i] = m.mean;
        f.variance[i] = m.variance;
        f.lower[i] = b.lower;
        f.upper[i] = b.upper;
    }
    return f;
}

RegionForecast forecast_region(const std::vector<CentreProfile>& centres,
                               const RateSchedule& schedule, const Eigen::ArrayXd& grid,
                               double confidence)
{
    std::vector<MomentPair> moments;
    moments.reserve(static_cast<std::size_t>(grid.size()));
    for (const double t : grid) moments.push_back(region_moments(centres, schedule, t));
    return forecast_from_moments(grid, moments, confidence);
}

Eigen::ArrayXd daily_grid(double first, double last)
{
    if (last < first) throw DomainError("grid end precedes start");
    const auto n = static_cast<Eigen::Index>(std::floor(last - first)) + 1;
    return Eigen::ArrayXd::LinSpaced(n, first, first + static_cast<double>(n - 1));
}

CompletionEstimate time_to_target(const RegionForecast& forecast, long target)
{
    if (target < 1) throw DomainError("target must be >= 1");
    CompletionEstimate out;
    const double t = static_cast<double>(target);
    for (Eigen::Index i = 0; i < forecast.size(); ++i)
    {
        if (!out.mean_day && forecast.mean[i] >= t) out.mean_day = forecast.times[i];
        if (!out.lower_day && forecast.upper[i] >= target) out.lower_day = forecast.times[i];
        if (!out.upper_day && forecast.lower[i] >= target) out.upper_day = forecast.times[i];
    }
    return out;
}

std::optional<long> suggest_horizon(const std::vector<CentreProfile>& centres,
                                    const RateSchedule& schedule, long target, long cap)
{
    if (target < 1) throw DomainError("target must be >= 1");
    constexpr double kLowQuantile = 0.001;
    const auto reached = [&](long day) {
        const MomentPair m = region_moments(centres, schedule, static_cast<double>(day));
        return m.mean > 0.0 && pg_quantile(kLowQuantile, m) >= target;
    };
    if (!reached(cap)) return std::nullopt;
    long lo = 0;  // not reached
    long hi = cap;
    while (hi - lo > 1)
    {
        const long mid = lo + (hi - lo) / 2;
        if (reached(mid))
            hi = mid;
        else
            lo = mid;
    }
    return static_cast<long>(std::ceil(1.25 * static_cast<double>(hi)));
}

}  // namespace pgrecruit
