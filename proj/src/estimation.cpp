#include "pgrecruit/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <map>
#include <utility>

#include "pgrecruit/errors.hpp"
#include "pgrecruit/special.hpp"

namespace pgrecruit
{
namespace
{

// Records with identical (k, tau) share one likelihood term.
struct WeightedRecord
{
    long count;
    double exposure;
    double weight;
};

std::vector<WeightedRecord> compress(const EnrollmentData& data)
{
    std::map<std::pair<long, double>, double> grouped;
    for (const auto& r : data.records)
    {
        if (r.count < 0 || !(r.exposure >= 0.0))
        {
            throw DomainError("enrollment record '" + r.centre_id + "': negative count or exposure");
        }
        if (r.exposure == 0.0)
        {
            if (r.count > 0)
            {
                throw DomainError("enrollment record '" + r.centre_id
                                  + "': events recorded with zero exposure");
            }
            continue;
        }
        grouped[{r.count, r.exposure}] += 1.0;
    }
    std::vector<WeightedRecord> out;
    out.reserve(grouped.size());
    for (const auto& [key, w] : grouped) out.push_back({key.first, key.second, w});
    return out;
}

double compressed_log_likelihood(const std::vector<WeightedRecord>& recs, double shape, double rate)
{
    double total = 0.0;
    for (const auto& r : recs)
    {
        const double k = static_cast<double>(r.count);
        const double term = special::log_gamma_ratio(shape, k) - special::log_factorial(r.count)
                            - shape * std::log1p(r.exposure / rate)
                            - k * std::log1p(rate / r.exposure);
        total += r.weight * term;
    }
    return total;
}

struct MomentStart
{
    double log_shape;
    double log_mean;
};

MomentStart moment_start(const std::vector<WeightedRecord>& recs)
{
    double k_sum = 0.0, tau_sum = 0.0, tau2_sum = 0.0, weight = 0.0;
    for (const auto& r : recs)
    {
        k_sum += r.weight * static_cast<double>(r.count);
        tau_sum += r.weight * r.exposure;
        tau2_sum += r.weight * r.exposure * r.exposure;
        weight += r.weight;
    }
    const double m0 = k_sum / tau_sum;
    double excess = 0.0;
    for (const auto& r : recs)
    {
        const double dev = static_cast<double>(r.count) - m0 * r.exposure;
        excess += r.weight * (dev * dev - m0 * r.exposure);
    }
    const double mean_tau = tau_sum / weight;
    const double s2 = std::max(excess / tau2_sum, 0.01 * m0 / mean_tau);
    return {std::log(m0 * m0 / s2), std::log(m0)};
}

void check_fit_data(const std::vector<WeightedRecord>& recs)
{
    double exposed = 0.0;
    long events = 0;
    for (const auto& r : recs)
    {
        exposed += r.weight;
        events += r.count;
    }
    if (exposed < 2.0) throw DomainError("fit: need at least two records with positive exposure");
    if (events == 0)
    {
        throw DomainError("fit: all counts are zero, the likelihood has no interior maximum");
    }
}

// Multi-start Nelder-Mead over x = (ln alpha, ln m, extra...), m = alpha/beta.
// `objective` returns the log-likelihood to maximize.
template <typename Objective>
FitResult maximize(Objective&& objective, const Eigen::VectorXd& base,
                   const std::vector<Eigen::VectorXd>& offsets, const FitOptions& options)
{
    const double bound = options.log_shape_bound;
    const auto negated = [&](const Eigen::VectorXd& x) {
        if (std::fabs(x[0]) > bound) return std::numeric_limits<double>::infinity();
        return -objective(x);
    };

    NelderMeadResult best;
    best.value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    for (const auto& off : offsets)
    {
        Eigen::VectorXd start = base + off;
        start[0] = std::clamp(start[0], -bound + 1.0, bound - 1.0);
        auto run = nelder_mead(negated, start, options.optimizer);
        // Polish from the best vertex; a collapsed simplex can stall early.
        if (run.converged)
        {
            auto polish = nelder_mead(negated, run.x, options.optimizer);
            polish.iterations += run.iterations;
            if (polish.value <= run.value) run = polish;
        }
        iterations += run.iterations;
        if (run.value < best.value) best = run;
    }
    if (!std::isfinite(best.value)) throw NumericError("fit: likelihood is not finite at any start");

    FitResult out;
    out.shape = std::exp(best.x[0]);
    out.rate = out.shape / std::exp(best.x[1]);
    for (Eigen::Index j = 2; j < best.x.size(); ++j) out.rate_params.push_back(best.x[j]);
    out.log_likelihood = -best.value;
    out.converged = best.converged;
    out.iterations = iterations;
    out.boundary = std::fabs(best.x[0]) > bound - 1.0;
    if (out.boundary)
    {
        out.warnings.emplace_back(best.x[0] > 0.0
                                      ? "shape at upper search bound: no overdispersion in data"
                                      : "shape at lower search bound: extreme overdispersion");
    }
    if (!out.converged) out.warnings.emplace_back("optimizer did not reach tolerance");
    return out;
}

std::vector<Eigen::VectorXd> shape_offsets(Eigen::Index dim, int starts)
{
    static constexpr double kShifts[] = {0.0, 2.0, -2.0, 5.0, -5.0, 8.0, 1.0, -1.0};
    std::vector<Eigen::VectorXd> offsets;
    const int n = std::clamp(starts, 1, static_cast<int>(std::size(kShifts)));
    for (int i = 0; i < n; ++i)
    {
        const double d = kShifts[i];
        Eigen::VectorXd off = Eigen::VectorXd::Zero(dim);
        off[0] = d;
        offsets.push_back(off);
    }
    return offsets;
}

}  // namespace

long EnrollmentData::total_count() const
{
    long total = 0;
    for (const auto& r : records) total += r.count;
    return total;
}

double EnrollmentData::total_exposure() const
{
    double total = 0.0;
    for (const auto& r : records) total += r.exposure;
    return total;
}

double effective_event_day(long day, double activation_day)
{
    const double first_active = std::floor(activation_day) + 1.0;
    return std::max(static_cast<double>(day), first_active);
}

long count_events(const CentreEvents& centre, double from, double to)
{
    long n = 0;
    for (const long d : centre.event_days)
    {
        const double e = effective_event_day(d, centre.activation_day);
        if (e > from && e <= to) ++n;
    }
    return n;
}

EnrollmentData exposure_data(const std::vector<CentreEvents>& centres, const RateSchedule& schedule,
                             double from, double to)
{
    if (to < from) throw DomainError("exposure interval end precedes start");
    EnrollmentData data;
    data.records.reserve(centres.size());
    for (const auto& c : centres)
    {
        data.records.push_back(
            {c.id, count_events(c, from, to),
             cumulative_rate_factor(schedule.for_group(c.group), from, to, c.activation_day)});
    }
    return data;
}

EnrollmentData restrict_window(const std::vector<CentreEvents>& centres, double interim,
                               double window_length)
{
    if (!(window_length > 0.0)) throw DomainError("window length must be positive");
    const double from = interim - window_length;
    EnrollmentData data;
    bool any_active = false;
    for (const auto& c : centres)
    {
        const double tau = recruitment_window(from, interim, c.activation_day);
        any_active = any_active || tau > 0.0;
        data.records.push_back({c.id, count_events(c, from, interim), tau});
    }
    if (!any_active) throw DomainError("window contains no active centre");
    return data;
}

double log_likelihood(const EnrollmentData& data, double shape, double rate)
{
    validate(PGParams{shape, rate});
    double total = 0.0;
    for (const auto& r : data.records)
    {
        if (r.exposure > 0.0) total += pg_log_pmf(r.count, r.exposure, shape, rate);
        else if (r.count > 0)
            throw DomainError("enrollment record '" + r.centre_id + "': events with zero exposure");
    }
    return total;
}

FitResult fit_pg(const EnrollmentData& data, const FitOptions& options)
{
    const auto recs = compress(data);
    check_fit_data(recs);
    const MomentStart s = moment_start(recs);
    Eigen::VectorXd base(2);
    base << s.log_shape, s.log_mean;
    return maximize(
        [&recs](const Eigen::VectorXd& x) {
            const double shape = std::exp(x[0]);
            return compressed_log_likelihood(recs, shape, shape / std::exp(x[1]));
        },
        base, shape_offsets(2, options.starts), options);
}

PGParams posterior_rate(const PGParams& prior, long count, double exposure)
{
    validate(prior);
    if (count < 0 || !(exposure >= 0.0)) throw DomainError("posterior: negative count or exposure");
    return {prior.shape + static_cast<double>(count), prior.rate + exposure};
}

RateFamily RateFamily::fixed(RateFunction r)
{
    RateFamily f;
    f.fixed_ = std::move(r);
    return f;
}

RateFamily RateFamily::exponential_decay(double start, double horizon, double initial_kappa)
{
    // Validates start and horizon.
    (void)RateFunction::exponential_decay(start, start, horizon);
    RateFamily f;
    f.exponential_ = true;
    f.start_ = start;
    f.horizon_ = horizon;
    f.initial_kappa_ = initial_kappa;
    return f;
}

RateFunction RateFamily::make(const std::vector<double>& theta) const
{
    if (static_cast<int>(theta.size()) != dimension())
    {
        throw DomainError("rate family: wrong number of parameters");
    }
    if (!exponential_) return fixed_;
    return RateFunction::exponential_decay(start_, start_ * std::exp(-theta[0] * horizon_),
                                           horizon_);
}

std::vector<double> RateFamily::initial() const
{
    if (!exponential_) return {};
    return {initial_kappa_};
}

FitResult fit_pg_timedep(const std::vector<CentreEvents>& centres, const RateFamily& family,
                         double t0, double t1, const FitOptions& options)
{
    if (!(t1 > t0)) throw DomainError("fit window must have positive length");
    if (family.dimension() == 0)
    {
        return fit_pg(exposure_data(centres, RateSchedule(family.make({})), t0, t1), options);
    }

    // Per centre: activation, and the distinct effective event days in the
    // window with their multiplicities.
    struct CentreDays
    {
        double activation;
        long total;
        std::vector<std::pair<double, double>> days;  // (effective day, count)
    };
    std::vector<CentreDays> prepared;
    bool identical_windows = true;
    for (const auto& c : centres)
    {
        CentreDays cd{c.activation_day, 0, {}};
        for (const long d : c.event_days)
        {
            const double e = effective_event_day(d, c.activation_day);
            if (!(e > t0 && e <= t1)) continue;
            ++cd.total;
            if (!cd.days.empty() && cd.days.back().first == e)
                cd.days.back().second += 1.0;
            else
                cd.days.emplace_back(e, 1.0);
        }
        identical_windows = identical_windows && c.activation_day <= t0;
        prepared.push_back(std::move(cd));
    }

    // The free rate parameter is optimized as kappa * horizon, which is of
    // order one for any realistic decay.
    const RateFunction r0 = family.make(family.initial());
    const double horizon = std::get<ExponentialDecayRate>(r0.variant()).horizon;

    const auto evaluate = [&](const Eigen::VectorXd& x) {
        const RateFunction r = family.make({x[2] / horizon});
        const double shape = std::exp(x[0]);
        const double rate = shape / std::exp(x[1]);
        double total = 0.0;
        for (const auto& cd : prepared)
        {
            const double tau = cumulative_rate_factor(r, t0, t1, cd.activation);
            if (tau <= 0.0) continue;
            total += pg_log_pmf(cd.total, tau, shape, rate);
            for (const auto& [day, n] : cd.days)
            {
                total += n * std::log(cumulative_rate_factor(r, day - 1.0, day, cd.activation) / tau);
            }
        }
        return total;
    };

    EnrollmentData initial_data;
    for (const auto& cd : prepared)
    {
        initial_data.records.push_back(
            {"", cd.total, cumulative_rate_factor(r0, t0, t1, cd.activation)});
    }
    const auto recs = compress(initial_data);
    check_fit_data(recs);
    const MomentStart s = moment_start(recs);
    Eigen::VectorXd base(3);
    base << s.log_shape, s.log_mean, family.initial()[0] * horizon;

    auto offsets = shape_offsets(3, options.starts);
    for (const double dc : {0.5, -0.5})
    {
        Eigen::VectorXd off = Eigen::VectorXd::Zero(3);
        off[2] = dc;
        offsets.push_back(off);
    }
    FitResult out = maximize(evaluate, base, offsets, options);
    out.rate_params[0] /= horizon;
    if (identical_windows)
    {
        out.warnings.emplace_back(
            "all centres share the fitting window; the rate parameter is identified only by "
            "within-window timing of events");
    }
    return out;
}

}  // namespace pgrecruit
