#pragma once

#include <string>
#include <vector>

#include "pgrecruit/estimation.hpp"
#include "pgrecruit/forecast.hpp"

namespace pgrecruit
{

enum class StrategyKind
{
    all_data,         ///< homogeneous fit on [0, interim], r = 1 forward
    window,           ///< homogeneous fit on the last L days, r = 1 forward
    timedep_known_r,  ///< fit with a given r(t) on [0, interim], r(t) forward
    timedep_fit_r,    ///< joint fit of (alpha, beta, decay rate) on [0, interim]
};

std::string to_string(StrategyKind kind);

struct Strategy
{
    StrategyKind kind = StrategyKind::all_data;
    double window_days = 90.0;  ///< window strategy only
    /// Known modulation (timedep-known-r) or the family whose parameter is
    /// fitted (timedep-fit-r).
    RateSchedule known_rate{};
    RateFamily family = RateFamily::fixed(RateFunction::constant());

    static Strategy all_data();
    static Strategy window(double days);
    static Strategy timedep_known(RateSchedule r);
    static Strategy timedep_fit(RateFamily family);

    std::string describe() const;
};

enum class Conditioning
{
    posterior,  ///< per-centre conjugate update with each centre's own data
    prior,      ///< fitted (alpha, beta) for every centre
};

struct ReprojectionReport
{
    Strategy strategy;
    FitResult fit;
    long observed = 0;  ///< events up to the interim time
    CompletionEstimate completion;
    double prob_success = 0.0;  ///< P(target reached by the deadline)
    RegionForecast forecast;    ///< total (observed + predicted) from the interim day on
};

struct ReprojectionOptions
{
    double confidence = 0.8;
    Conditioning conditioning = Conditioning::posterior;
    /// Forecast grid runs from the interim day until the lower bound
    /// reaches the target, the deadline is passed, or this many days.
    long max_forecast_days = 20000;
    FitOptions fit{};
};

/// Per-centre posterior rates plugged into the moment sums over
/// [interim, t] for each grid day t. `fit_data` supplies each centre's
/// count and exposure (matched by id); absent centres keep the prior.
RegionForecast forward_forecast_posterior(const FitResult& fit, const EnrollmentData& fit_data,
                                          const std::vector<CentreEvents>& centres,
                                          const RateSchedule& forward_rate, double interim,
                                          const Eigen::ArrayXd& grid, double confidence,
                                          Conditioning conditioning = Conditioning::posterior);

ReprojectionReport reproject(const std::vector<CentreEvents>& centres, double interim,
                             double deadline, long target, const Strategy& strategy,
                             const ReprojectionOptions& options = {});

}  // namespace pgrecruit
