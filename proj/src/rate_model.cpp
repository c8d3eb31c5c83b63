#include "pgrecruit/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pgrecruit/errors.hpp"

namespace pgrecruit
{
namespace
{

double piecewise_at(const PiecewiseLinearRate& p, double t)
{
    const auto& x = p.days;
    const auto& y = p.multipliers;
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - x[lo]) / (x[hi] - x[lo]);
    return y[lo] + w * (y[hi] - y[lo]);
}

double piecewise_integral(const PiecewiseLinearRate& p, double a, double b)
{
    // Trapezoids between consecutive knots of {a, b} united with the
    // breakpoints inside (a, b); r is linear on each piece.
    double total = 0.0;
    double left = a;
    double r_left = piecewise_at(p, a);
    for (double knot : p.days)
    {
        if (knot <= a) continue;
        if (knot >= b) break;
        const double r_knot = piecewise_at(p, knot);
        total += 0.5 * (r_left + r_knot) * (knot - left);
        left = knot;
        r_left = r_knot;
    }
    total += 0.5 * (r_left + piecewise_at(p, b)) * (b - left);
    return total;
}

// integral of start * exp(-kappa x) over [a, b] with 0 <= a <= b
double exp_segment(double start, double kappa, double a, double b)
{
    const double width = b - a;
    if (std::fabs(kappa * width) < 1e-12) return start * std::exp(-kappa * a) * width;
    return start * std::exp(-kappa * a) * (-std::expm1(-kappa * width)) / kappa;
}

double exp_integral(const ExponentialDecayRate& e, double a, double b)
{
    const double kappa = e.decay_rate();
    double total = 0.0;
    if (a < 0.0)
    {
        total += e.start * (std::min(b, 0.0) - a);
        a = 0.0;
        if (b <= a) return total;
    }
    if (a < e.horizon)
    {
        total += exp_segment(e.start, kappa, a, std::min(b, e.horizon));
        a = e.horizon;
    }
    if (b > a) total += e.end * (b - a);
    return total;
}

}  // namespace

double ExponentialDecayRate::decay_rate() const
{
    return std::log(start / end) / horizon;
}

RateFunction RateFunction::constant()
{
    return RateFunction(ConstantRate{});
}

RateFunction RateFunction::piecewise_linear(std::vector<double> days, std::vector<double> multipliers)
{
    if (days.empty() || days.size() != multipliers.size())
    {
        throw DomainError("piecewise-linear rate needs matching, nonempty day and multiplier lists");
    }
    for (std::size_t i = 0; i < days.size(); ++i)
    {
        if (!std::isfinite(days[i]) || !(multipliers[i] >= 0.0) || !std::isfinite(multipliers[i]))
        {
            throw DomainError("piecewise-linear rate: multipliers must be finite and >= 0");
        }
        if (i > 0 && !(days[i] > days[i - 1]))
        {
            throw DomainError("piecewise-linear rate: breakpoint days must be strictly increasing");
        }
    }
    return RateFunction(PiecewiseLinearRate{std::move(days), std::move(multipliers)});
}

RateFunction RateFunction::exponential_decay(double start, double end, double horizon)
{
    if (!(start > 0.0) || !(end > 0.0) || !std::isfinite(start) || !std::isfinite(end))
    {
        throw DomainError("exponential-decay rate: start and end multipliers must be positive");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon))
    {
        throw DomainError("exponential-decay rate: horizon must be positive");
    }
    return RateFunction(ExponentialDecayRate{start, end, horizon});
}

double RateFunction::at(double t) const
{
    return std::visit(
        [t](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConstantRate>)
            {
                return 1.0;
            }
            else if constexpr (std::is_same_v<T, PiecewiseLinearRate>)
            {
                return piecewise_at(v, t);
            }
            else
            {
                if (t <= 0.0) return v.start;
                if (t >= v.horizon) return v.end;
                return v.start * std::pow(v.end / v.start, t / v.horizon);
            }
        },
        variant_);
}

double RateFunction::integral(double a, double b) const
{
    if (b < a) throw DomainError("rate integral: interval end precedes start");
    if (b == a) return 0.0;
    return std::visit(
        [a, b](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConstantRate>)
            {
                return b - a;
            }
            else if constexpr (std::is_same_v<T, PiecewiseLinearRate>)
            {
                return piecewise_integral(v, a, b);
            }
            else
            {
                return exp_integral(v, a, b);
            }
        },
        variant_);
}

std::string RateFunction::describe() const
{
    std::ostringstream out;
    out.precision(17);
    std::visit(
        [&out](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConstantRate>)
            {
                out << "constant";
            }
            else if constexpr (std::is_same_v<T, PiecewiseLinearRate>)
            {
                out << "piecewise-linear";
                for (std::size_t i = 0; i < v.days.size(); ++i)
                {
                    out << (i == 0 ? " " : ";") << v.days[i] << ':' << v.multipliers[i];
                }
            }
            else
            {
                out << "exp-decay " << v.start << ' ' << v.end << ' ' << v.horizon;
            }
        },
        variant_);
    return out.str();
}

double rate_at(const RateFunction& r, double t)
{
    return r.at(t);
}

double cumulative_rate_factor(const RateFunction& r, double a, double b, double u)
{
    if (b < a) throw DomainError("cumulative rate factor: interval end precedes start");
    const double from = std::max(a, u);
    return from < b ? r.integral(from, b) : 0.0;
}

double recruitment_window(double y, double z, double u)
{
    if (z < y) throw DomainError("recruitment window: interval end precedes start");
    if (u < y) return z - y;
    if (u < z) return z - u;
    return 0.0;
}

void validate(const CentreProfile& centre)
{
    if (!(centre.shape > 0.0) || !(centre.rate > 0.0) || !std::isfinite(centre.shape)
        || !std::isfinite(centre.rate))
    {
        throw DomainError("centre '" + centre.id + "': gamma parameters must be positive");
    }
    if (!(centre.activation_day >= 0.0) || !std::isfinite(centre.activation_day))
    {
        throw DomainError("centre '" + centre.id + "': activation day must be >= 0");
    }
}

const RateFunction& RateSchedule::for_group(const std::string& group) const
{
    const auto it = by_group_.find(group);
    return it == by_group_.end() ? fallback_ : it->second;
}

}  // namespace pgrecruit
