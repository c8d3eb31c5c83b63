#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace pgrecruit
{

/// r(t) = 1
struct ConstantRate
{
};

/// Linear interpolation between (day, multiplier) breakpoints; flat beyond
/// the first and last breakpoint.
struct PiecewiseLinearRate
{
    std::vector<double> days;
    std::vector<double> multipliers;
};

/// r(t) = start * (end/start)^(t/horizon) on [0, horizon], end beyond it and
/// start before day 0.
struct ExponentialDecayRate
{
    double start = 1.0;
    double end = 1.0;
    double horizon = 1.0;

    /// kappa in r(t) = start * exp(-kappa t)
    double decay_rate() const;
};

/// Shared time modulation of centre rates. Construct through the factories,
/// which enforce the invariants.
class RateFunction
{
public:
    using Variant = std::variant<ConstantRate, PiecewiseLinearRate, ExponentialDecayRate>;

    RateFunction() = default;

    static RateFunction constant();
    /// days strictly increasing, multipliers >= 0, at least one breakpoint
    static RateFunction piecewise_linear(std::vector<double> days, std::vector<double> multipliers);
    /// start, end > 0 and horizon > 0
    static RateFunction exponential_decay(double start, double end, double horizon);

    double at(double t) const;
    /// integral of r over [a, b], a <= b
    double integral(double a, double b) const;

    const Variant& variant() const { return variant_; }
    bool is_constant() const { return std::holds_alternative<ConstantRate>(variant_); }
    std::string describe() const;

private:
    explicit RateFunction(Variant v) : variant_(std::move(v)) {}
    Variant variant_{ConstantRate{}};
};

double rate_at(const RateFunction& r, double t);

/// R(a, b, u): integral over [a, b] of r(x) restricted to x > u.
double cumulative_rate_factor(const RateFunction& r, double a, double b, double u);

/// Active duration inside [y, z] of a centre activated at u.
double recruitment_window(double y, double z, double u);

struct CentreProfile
{
    std::string id;
    std::string group;
    double shape = 1.0;  ///< alpha_i
    double rate = 1.0;   ///< beta_i, per day
    double activation_day = 0.0;

    double mean_rate() const { return shape / rate; }
    double rate_variance() const { return shape / (rate * rate); }
};

/// Throws DomainError unless shape, rate > 0 and activation_day >= 0.
void validate(const CentreProfile& centre);

/// One rate function per centre group with a fallback for unlisted groups.
class RateSchedule
{
public:
    RateSchedule() = default;
    explicit RateSchedule(RateFunction fallback) : fallback_(std::move(fallback)) {}

    void set(const std::string& group, RateFunction r) { by_group_[group] = std::move(r); }
    const RateFunction& for_group(const std::string& group) const;
    const RateFunction& fallback() const { return fallback_; }
    const std::map<std::string, RateFunction>& overrides() const { return by_group_; }

private:
    RateFunction fallback_;
    std::map<std::string, RateFunction> by_group_;
};

}  // namespace pgrecruit
