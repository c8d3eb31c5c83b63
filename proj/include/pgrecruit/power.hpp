#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "pgrecruit/homogeneity.hpp"

namespace pgrecruit
{

/// Two-interval design: N_j centres active throughout interval j of length
/// L_j, rate m1 in interval 1 and m2 = q m1 in interval 2 under H1.
struct PowerScenario
{
    double m1 = 0.04;
    double q = 0.5;
    double length1 = 90.0;
    double length2 = 90.0;
    long centres1 = 7;
    long centres2 = 7;
    double delta = 0.1;
    /// Per-centre gamma shape; required for the Poisson-gamma test, whose
    /// centres recruit in both intervals so centres1 must equal centres2.
    std::optional<double> shape;
    long runs = 100000;
    std::uint64_t seed = 1;
    int workers = 1;

    /// Same scenario with N centres in both intervals.
    PowerScenario with_centres(long n) const;
};

void validate(const PowerScenario& s, TestKind kind);

enum class Hypothesis
{
    h0,
    h1,
};

/// Simulated counts of one run layout: interval 1, and interval 2 under H0
/// (rate m1) and under H1 (rate q m1). Interval 1 is shared by both
/// hypotheses. Poisson kinds fill the totals only; the Poisson-gamma kind
/// also keeps per-centre counts (runs x N) from one gamma rate draw per
/// centre and run, reused across intervals.
struct IntervalCounts
{
    Eigen::Array<long, Eigen::Dynamic, 1> n1;
    Eigen::Array<long, Eigen::Dynamic, 1> n2_h0;
    Eigen::Array<long, Eigen::Dynamic, 1> n2_h1;
    Eigen::MatrixXi centre1;
    Eigen::MatrixXi centre2_h0;
    Eigen::MatrixXi centre2_h1;
};

IntervalCounts simulate_interval_counts(const PowerScenario& s, TestKind kind);

/// Upper p-values of interval 1 per run under each hypothesis.
struct StatisticSamples
{
    Eigen::ArrayXd h0;
    Eigen::ArrayXd h1;
};

StatisticSamples simulate_statistics(const PowerScenario& s, TestKind kind);

/// Largest threshold a <= delta among {delta} and the sample values with
/// empirical mass P(T <= a) <= delta.
double calibrate_threshold(const Eigen::ArrayXd& h0_samples, double delta);
double calibrate_threshold(const PowerScenario& s, TestKind kind);

struct PowerResult
{
    double a_delta = 0.0;
    double pvalue_h0 = 0.0;  ///< E[T_H0]
    double pvalue_h1 = 0.0;  ///< E[T_H1]
    double power = 0.0;      ///< P(T_H1 <= a_delta)
    double type1 = 0.0;      ///< P(T_H0 <= a_delta) on the calibration sample
    double pvalue_h0_se = 0.0;
    double pvalue_h1_se = 0.0;
    double power_se = 0.0;
    long runs = 0;
};

PowerResult estimate_power(const StatisticSamples& samples, double a_delta);
PowerResult estimate_power(const PowerScenario& s, TestKind kind, double a_delta);
/// Simulates, calibrates a(delta) and estimates power in one pass.
PowerResult analyse_power(const PowerScenario& s, TestKind kind);

struct CentreSearch
{
    long centres = 0;
    bool target_met = false;  ///< false: `centres` is the search cap
    PowerResult at_centres;
};

/// Smallest N (both intervals) with E[T_H1] <= delta, by doubling then
/// bisection. Each candidate reuses the scenario seed.
CentreSearch min_centres_for_pvalue(const PowerScenario& base, TestKind kind, long max_centres = 2000);

/// Smallest N with P(T_H1 <= a(delta)) >= target_power, recalibrating a(delta)
/// at every candidate.
CentreSearch min_centres_for_power(const PowerScenario& base, TestKind kind, double target_power,
                                   long max_centres = 2000);

}  // namespace pgrecruit
