#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "pgrecruit/estimation.hpp"
#include "pgrecruit/rate_model.hpp"

namespace pgrecruit
{

struct TrialConfig
{
    std::vector<CentreProfile> centres;
    RateSchedule schedule;
    long horizon = 1;  ///< T, days simulated
    long target = 1;
    std::uint64_t seed = 1;
};

void validate(const TrialConfig& config);

/// Per-centre cumulative daily counts, N x T; column t - 1 holds day t.
using TrajectoryMatrix = Eigen::MatrixXi;

/// One trial: lambda_i ~ Ga(alpha_i, beta_i) once per centre, then on each
/// day k > u_i an independent Poisson(lambda_i r(k)) count. The centre's
/// stream is keyed by (seed, run, centre id).
TrajectoryMatrix simulate_trial(const TrialConfig& config, std::uint64_t run = 0);

/// Event history of a simulated trial, one entry per centre.
std::vector<CentreEvents> trajectory_events(const TrialConfig& config,
                                            const TrajectoryMatrix& trajectory);

struct EnsembleSummary
{
    /// Global cumulative count per run and day, runs x T.
    Eigen::MatrixXi global;
    Eigen::ArrayXd mean;
    Eigen::ArrayXd median;
    Eigen::ArrayXd lower;  ///< (1 - P)/2 pointwise quantile
    Eigen::ArrayXd upper;  ///< (1 + P)/2 pointwise quantile
    double confidence = 0.8;
    /// First day with global count >= target, or -1 when not reached by T.
    Eigen::ArrayXi completion_day;

    /// Fraction of runs reaching the target on or before `day`.
    double prob_success(long day) const;
};

EnsembleSummary simulate_ensemble(const TrialConfig& config, long runs, double confidence = 0.8,
                                  int workers = 1);

}  // namespace pgrecruit
