#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pgrecruit/distributions.hpp"
#include "pgrecruit/estimation.hpp"

namespace pgrecruit
{

/// One centre's events and active window inside an interval.
struct CentreInterval
{
    std::string id;
    long count = 0;
    double window = 0.0;
};

/// Totals over one interval: n events across U centre-days of activity.
struct IntervalData
{
    double start = 0.0;
    double end = 0.0;
    long n = 0;
    double exposure = 0.0;  ///< U
    std::vector<CentreInterval> per_centre;  ///< active centres only; empty for totals-only data
};

enum class TestKind
{
    poisson_nonparametric,
    poisson_parametric,
    poisson_gamma,
};

enum class Verdict
{
    rate_decreased,
    rate_increased,
    no_evidence,
};

std::string to_string(TestKind kind);
std::string to_string(Verdict verdict);

/// Upper and lower p-values for interval 1 against the pooled rate. Both
/// tails include the observed count, so p_upper + p_lower >= 1.
struct TestReport
{
    TestKind kind = TestKind::poisson_nonparametric;
    double p_upper = 1.0;
    double p_lower = 1.0;
    double delta = 0.1;
    Verdict verdict = Verdict::no_evidence;
    std::optional<FitResult> fit;  ///< pooled fit, poisson-gamma test only
};

Verdict decide(double p_upper, double p_lower, double delta);

/// Totals over [a, b]: U from recruitment windows, n from events with
/// effective day in (a, b].
IntervalData interval_totals(const std::vector<CentreEvents>& centres, double a, double b);

/// Totals-only interval data.
IntervalData interval_totals(long n, double exposure);

/// n1 given n1 + n2 is Bin(n, U1/U) under equal rates.
TestReport poisson_nonparametric_test(const IntervalData& d1, const IntervalData& d2,
                                      double delta = 0.1);

/// n1 against Poisson(n U1/U).
TestReport poisson_parametric_test(const IntervalData& d1, const IntervalData& d2,
                                   double delta = 0.1);

/// Fits (alpha, beta) on the per-centre union of both intervals and compares
/// n1 with PG(E^2/S^2, E/S^2), E = m sum v_i, S^2 = s^2 sum v_i^2.
TestReport pg_test(const IntervalData& d1, const IntervalData& d2, double delta = 0.1,
                   const FitOptions& options = {});

/// PG test from an already assembled union data set and interval-1 summary.
TestReport pg_test(const EnrollmentData& union_data, long n1, double window_sum,
                   double window_square_sum, double delta = 0.1, const FitOptions& options = {});

/// Unrounded number of centres per interval needed for the normal
/// approximation of the upper p-value to reach delta when m2 = q m1.
/// Coefficient 2 for the binomial test, 3 for the parametric Poisson test.
double required_centres_value(double q, double m1, double window_days, double delta, TestKind kind);

long required_centres_nonparam(double q, double m1, double window_days, double delta);
long required_centres_param(double q, double m1, double window_days, double delta);

/// Normal approximation of the upper p-value when interval rates are m1, m2.
double normal_approx_pupp(double m1, double m2, double u1, double u2, TestKind kind);

struct StatisticMoments
{
    double mean = 0.0;
    double variance = 0.0;
};

/// Mean and variance of X = Bin(pi1 + pi2, p) - pi1 (binomial test) or
/// X2 = Poisson((pi1 + pi2) p) - pi1 (parametric test), pi_j ~ Poisson(m_j U_j).
StatisticMoments statistic_moments(double m1, double m2, double u1, double u2, TestKind kind);

}  // namespace pgrecruit
