#include "pgrecruit/reprojection.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "pgrecruit/errors.hpp"
#include "pgrecruit/special.hpp"

namespace pgrecruit
{
namespace
{

struct ForwardCentre
{
    double mean_rate;
    double rate_variance;
    double activation;
    const RateFunction* r;
};

std::vector<ForwardCentre> forward_centres(const FitResult& fit, const EnrollmentData& fit_data,
                                           const std::vector<CentreEvents>& centres,
                                           const RateSchedule& forward_rate,
                                           Conditioning conditioning)
{
    std::map<std::string, const EnrollmentRecord*> by_id;
    for (const auto& rec : fit_data.records) by_id[rec.centre_id] = &rec;

    std::vector<ForwardCentre> out;
    out.reserve(centres.size());
    for (const auto& c : centres)
    {
        PGParams p = fit.params();
        if (conditioning == Conditioning::posterior)
        {
            const auto it = by_id.find(c.id);
            if (it != by_id.end()) p = posterior_rate(p, it->second->count, it->second->exposure);
        }
        out.push_back({p.mean(), p.variance(), c.activation_day, &forward_rate.for_group(c.group)});
    }
    return out;
}

MomentPair forward_moments(const std::vector<ForwardCentre>& centres, double from, double to)
{
    MomentPair m;
    for (const auto& c : centres)
    {
        const double big_r = cumulative_rate_factor(*c.r, from, to, c.activation);
        m.mean += c.mean_rate * big_r;
        m.variance += c.rate_variance * big_r * big_r;
    }
    return m;
}

// P(count >= need) for the PG approximation with the given moments.
double prob_at_least(long need, const MomentPair& m)
{
    if (need <= 0) return 1.0;
    if (m.mean <= 0.0) return 0.0;
    if (m.variance <= 0.0) return special::poisson_sf(need, m.mean);
    return pg_sf(need, pg_approx_params(m));
}

}  // namespace

std::string to_string(StrategyKind kind)
{
    switch (kind)
    {
    case StrategyKind::all_data: return "all-data";
    case StrategyKind::window: return "window";
    case StrategyKind::timedep_known_r: return "timedep-known-r";
    case StrategyKind::timedep_fit_r: return "timedep-fit-r";
    }
    return "unknown";
}

Strategy Strategy::all_data()
{
    return {};
}

Strategy Strategy::window(double days)
{
    if (!(days > 0.0)) throw DomainError("window length must be positive");
    Strategy s;
    s.kind = StrategyKind::window;
    s.window_days = days;
    return s;
}

Strategy Strategy::timedep_known(RateSchedule r)
{
    Strategy s;
    s.kind = StrategyKind::timedep_known_r;
    s.known_rate = std::move(r);
    return s;
}

Strategy Strategy::timedep_fit(RateFamily family)
{
    Strategy s;
    s.kind = StrategyKind::timedep_fit_r;
    s.family = std::move(family);
    return s;
}

std::string Strategy::describe() const
{
    std::ostringstream out;
    out << to_string(kind);
    if (kind == StrategyKind::window) out << '(' << window_days << ')';
    return out.str();
}

RegionForecast forward_forecast_posterior(const FitResult& fit, const EnrollmentData& fit_data,
                                          const std::vector<CentreEvents>& centres,
                                          const RateSchedule& forward_rate, double interim,
                                          const Eigen::ArrayXd& grid, double confidence,
                                          Conditioning conditioning)
{
    const auto fc = forward_centres(fit, fit_data, centres, forward_rate, conditioning);
    std::vector<MomentPair> moments;
    moments.reserve(static_cast<std::size_t>(grid.size()));
    for (const double t : grid)
    {
        moments.push_back(t > interim ? forward_moments(fc, interim, t) : MomentPair{});
    }
    return forecast_from_moments(grid, moments, confidence);
}

ReprojectionReport reproject(const std::vector<CentreEvents>& centres, double interim,
                             double deadline, long target, const Strategy& strategy,
                             const ReprojectionOptions& options)
{
    if (centres.empty()) throw DomainError("reprojection: no centres");
    if (!(interim > 0.0)) throw DomainError("reprojection: interim time must be positive");
    if (!(deadline > interim)) throw DomainError("reprojection: deadline must follow the interim time");
    if (target < 1) throw DomainError("reprojection: target must be >= 1");

    ReprojectionReport report;
    report.strategy = strategy;
    for (const auto& c : centres) report.observed += count_events(c, -1e300, interim);

    EnrollmentData data;
    RateSchedule forward;
    switch (strategy.kind)
    {
    case StrategyKind::all_data:
        data = exposure_data(centres, RateSchedule(), 0.0, interim);
        report.fit = fit_pg(data, options.fit);
        break;
    case StrategyKind::window:
        data = restrict_window(centres, interim, strategy.window_days);
        report.fit = fit_pg(data, options.fit);
        break;
    case StrategyKind::timedep_known_r:
        forward = strategy.known_rate;
        data = exposure_data(centres, forward, 0.0, interim);
        report.fit = fit_pg(data, options.fit);
        break;
    case StrategyKind::timedep_fit_r:
        report.fit = fit_pg_timedep(centres, strategy.family, 0.0, interim, options.fit);
        forward = RateSchedule(strategy.family.make(report.fit.rate_params));
        data = exposure_data(centres, forward, 0.0, interim);
        break;
    }

    const auto fc = forward_centres(report.fit, data, centres, forward, options.conditioning);
    const long need = target - report.observed;
    report.prob_success = prob_at_least(need, forward_moments(fc, interim, deadline));

    // Daily grid from the interim day until the lower bound reaches the
    // target (and the deadline is covered) or the day cap is hit.
    std::vector<double> days;
    std::vector<MomentPair> moments;
    const double last = interim + static_cast<double>(options.max_forecast_days);
    for (double t = interim; t <= last; t += 1.0)
    {
        const MomentPair m = t > interim ? forward_moments(fc, interim, t) : MomentPair{};
        days.push_back(t);
        moments.push_back(m);
        if (t < deadline) continue;
        if (need <= 0) break;
        if (m.mean > 0.0 && predictive_bounds(m, options.confidence).lower >= need) break;
    }
    const Eigen::ArrayXd grid = Eigen::Map<const Eigen::ArrayXd>(days.data(),
                                                                 static_cast<Eigen::Index>(days.size()));
    report.forecast = forecast_from_moments(grid, moments, options.confidence);
    report.forecast.shift(report.observed);
    report.completion = time_to_target(report.forecast, target);
    return report;
}

}  // namespace pgrecruit
