#pragma once

#include <string>
#include <vector>

#include "pgrecruit/distributions.hpp"
#include "pgrecruit/optimize.hpp"
#include "pgrecruit/rate_model.hpp"

namespace pgrecruit
{

/// One centre's count k and effective exposure tau over a fitting interval.
struct EnrollmentRecord
{
    std::string centre_id;
    long count = 0;
    double exposure = 0.0;
};

struct EnrollmentData
{
    std::vector<EnrollmentRecord> records;

    long total_count() const;
    double total_exposure() const;
};

/// Raw per-centre event history. Event days are integers; an event on day d
/// occupies (d-1, d]. Events on or before the activation day are placed on
/// the first active day.
struct CentreEvents
{
    std::string id;
    std::string group;
    double activation_day = 0.0;
    std::vector<long> event_days;  ///< sorted ascending
};

/// Effective day of an event used for interval membership.
double effective_event_day(long day, double activation_day);

/// Number of events with effective day in (from, to].
long count_events(const CentreEvents& centre, double from, double to);

/// Counts over (from, to] with exposures R_i(from, to, u_i) under the
/// schedule's rate function for each centre's group.
EnrollmentData exposure_data(const std::vector<CentreEvents>& centres, const RateSchedule& schedule,
                             double from, double to);

/// Counts and recruitment windows over [interim - L, interim] (r = 1).
/// Throws DomainError when no centre is active in the window.
EnrollmentData restrict_window(const std::vector<CentreEvents>& centres, double interim,
                               double window_length);

struct FitOptions
{
    NelderMeadOptions optimizer{};
    int starts = 4;
    /// |ln alpha| is confined to this bound; hitting it sets FitResult::boundary.
    double log_shape_bound = 20.0;
};

struct FitResult
{
    double shape = 0.0;  ///< alpha-hat
    double rate = 0.0;   ///< beta-hat
    std::vector<double> rate_params;  ///< fitted rate-function parameters, empty when d = 0
    double log_likelihood = 0.0;
    bool converged = false;
    /// The shape estimate sits at the search bound: the data show no
    /// overdispersion (alpha -> infinity) or extreme overdispersion.
    bool boundary = false;
    int iterations = 0;
    std::vector<std::string> warnings;

    PGParams params() const { return {shape, rate}; }
    double mean_rate() const { return shape / rate; }
    double rate_variance() const { return shape / (rate * rate); }
};

/// Sum over records with exposure > 0 of ln P(PG(tau_i, alpha, beta) = k_i).
double log_likelihood(const EnrollmentData& data, double shape, double rate);

/// Maximum-likelihood (alpha, beta) shared by all centres.
/// Throws DomainError with fewer than two exposed records or no events.
FitResult fit_pg(const EnrollmentData& data, const FitOptions& options = {});

/// Gamma conjugate update (alpha + k, beta + tau).
PGParams posterior_rate(const PGParams& prior, long count, double exposure);

/// Rate-function family with d free parameters.
class RateFamily
{
public:
    /// d = 0: the given rate function is taken as known.
    static RateFamily fixed(RateFunction r);
    /// d = 1: r(t) = start * exp(-kappa t) up to `horizon`, flat afterwards.
    /// The free parameter is kappa; `start` pins the scale of r, which is
    /// otherwise confounded with beta.
    static RateFamily exponential_decay(double start, double horizon, double initial_kappa);

    int dimension() const { return exponential_ ? 1 : 0; }
    RateFunction make(const std::vector<double>& theta) const;
    std::vector<double> initial() const;

private:
    RateFunction fixed_{};
    bool exponential_ = false;
    double start_ = 1.0;
    double horizon_ = 1.0;
    double initial_kappa_ = 0.0;
};

/// Joint fit of (alpha, beta, theta) on daily events in (t0, t1]. For d = 0
/// this equals fit_pg on the exposures R_i(t0, t1, u_i). For d > 0 the
/// likelihood adds, per centre, the multinomial term for how its events
/// fall across days given their total.
FitResult fit_pg_timedep(const std::vector<CentreEvents>& centres, const RateFamily& family,
                         double t0, double t1, const FitOptions& options = {});

}  // namespace pgrecruit
