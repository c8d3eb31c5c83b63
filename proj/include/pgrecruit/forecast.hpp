#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pgrecruit/distributions.hpp"
#include "pgrecruit/rate_model.hpp"

namespace pgrecruit
{

/// Moments of the cumulative rate over [from, to] summed across centres:
/// mean = sum m_i R_i, variance = sum s_i^2 R_i^2.
MomentPair region_moments(const std::vector<CentreProfile>& centres, const RateSchedule& schedule,
                          double from, double to);

/// Same over [0, t].
MomentPair region_moments(const std::vector<CentreProfile>& centres, const RateSchedule& schedule,
                          double t);

/// (A, B) = (mean^2/variance, mean/variance). Throws DomainError when
/// variance == 0 or mean <= 0; callers take the Poisson branch instead.
PGParams pg_approx_params(const MomentPair& moments);

struct Bounds
{
    long lower = 0;
    long upper = 0;
};

/// Equal-tailed predictive bounds of the count at confidence P, with the
/// Poisson branch for zero variance and (0, 0) for zero mean.
Bounds predictive_bounds(const MomentPair& moments, double confidence);

struct RegionForecast
{
    Eigen::ArrayXd times;
    Eigen::ArrayXd mean;
    Eigen::ArrayXd variance;
    Eigen::Array<long, Eigen::Dynamic, 1> lower;
    Eigen::Array<long, Eigen::Dynamic, 1> upper;
    double confidence = 0.8;

    Eigen::Index size() const { return times.size(); }
    /// Adds an already observed count to every mean and bound.
    void shift(long observed);
};

RegionForecast forecast_region(const std::vector<CentreProfile>& centres,
                               const RateSchedule& schedule, const Eigen::ArrayXd& grid,
                               double confidence);

/// Builds a forecast from precomputed moments per grid point.
RegionForecast forecast_from_moments(const Eigen::ArrayXd& grid,
                                     const std::vector<MomentPair>& moments, double confidence);

/// Daily grid first..last inclusive.
Eigen::ArrayXd daily_grid(double first, double last);

/// First grid days at which the mean, the upper bound and the lower bound
/// reach the target. lower_day comes from the upper bound and upper_day from
/// the lower bound, so lower_day <= mean_day <= upper_day when all exist.
struct CompletionEstimate
{
    std::optional<double> mean_day;
    std::optional<double> lower_day;
    std::optional<double> upper_day;
};

CompletionEstimate time_to_target(const RegionForecast& forecast, long target);

/// Simulation horizon that reaches `target` with high probability: the first
/// day on which the 0.001 quantile of the global count reaches the target,
/// times 1.25. Empty when the target is out of reach within `cap` days.
std::optional<long> suggest_horizon(const std::vector<CentreProfile>& centres,
                                    const RateSchedule& schedule, long target, long cap = 36500);

}  // namespace pgrecruit
