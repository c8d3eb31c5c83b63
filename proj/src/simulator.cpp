#include "pgrecruit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "pgrecruit/errors.hpp"
#include "pgrecruit/random.hpp"

namespace pgrecruit
{
namespace
{

// Prefix sums of r over days 1..T: cumulative[k] = r(1) + ... + r(k).
using DailyCumulative = std::vector<double>;

DailyCumulative daily_cumulative(const RateFunction& r, long horizon)
{
    DailyCumulative c(static_cast<std::size_t>(horizon) + 1, 0.0);
    for (long k = 1; k <= horizon; ++k)
    {
        c[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k - 1)] + r.at(static_cast<double>(k));
    }
    return c;
}

struct Plan
{
    std::vector<const DailyCumulative*> per_centre;
    std::map<std::string, DailyCumulative> by_group;
    DailyCumulative fallback;
};

Plan make_plan(const TrialConfig& config)
{
    Plan plan;
    plan.fallback = daily_cumulative(config.schedule.fallback(), config.horizon);
    for (const auto& [group, r] : config.schedule.overrides())
    {
        plan.by_group.emplace(group, daily_cumulative(r, config.horizon));
    }
    for (const auto& c : config.centres)
    {
        const auto it = plan.by_group.find(c.group);
        plan.per_centre.push_back(it == plan.by_group.end() ? &plan.fallback : &it->second);
    }
    return plan;
}

// Calls emit(day) once per event of centre i. Given lambda, the daily counts
// on active days k > u are independent Poisson(lambda r(k)); they are drawn
// as a Poisson total over the active days allocated across days in
// proportion to r(k), which has the same joint law.
template <typename Emit>
void simulate_centre(const TrialConfig& config, const DailyCumulative& cum, std::size_t i,
                     std::uint64_t run, Emit&& emit)
{
    const CentreProfile& c = config.centres[i];
    Engine eng(derive_seed(config.seed, run, hash_id(c.id)));
    const double lambda = std::gamma_distribution<double>(c.shape, 1.0 / c.rate)(eng);

    const long first = static_cast<long>(std::floor(c.activation_day)) + 1;
    if (first > config.horizon) return;
    const double base = cum[static_cast<std::size_t>(first - 1)];
    const double weight = cum.back() - base;
    const double mean = lambda * weight;
    if (!(mean > 0.0)) return;

    const long total = std::poisson_distribution<long>(mean)(eng);
    std::uniform_real_distribution<double> unif(0.0, weight);
    const auto begin = cum.begin() + first;
    for (long e = 0; e < total; ++e)
    {
        // x in (base, base + weight], so days with r(k) = 0 are never hit.
        const double x = base + (weight - unif(eng));
        auto it = std::lower_bound(begin, cum.end(), x);
        if (it == cum.end()) --it;
        emit(static_cast<long>(it - cum.begin()));
    }
}

}  // namespace

void validate(const TrialConfig& config)
{
    if (config.centres.empty()) throw DomainError("trial: no centres");
    if (config.horizon < 1) throw DomainError("trial: horizon must be >= 1 day");
    if (config.target < 1) throw DomainError("trial: target must be >= 1");
    std::set<std::string> ids;
    for (const auto& c : config.centres)
    {
        validate(c);
        // Random streams are keyed by centre id.
        if (!ids.insert(c.id).second) throw DomainError("trial: duplicate centre id '" + c.id + "'");
    }
}

TrajectoryMatrix simulate_trial(const TrialConfig& config, std::uint64_t run)
{
    validate(config);
    const Plan plan = make_plan(config);
    const auto n = static_cast<Eigen::Index>(config.centres.size());
    TrajectoryMatrix m = TrajectoryMatrix::Zero(n, config.horizon);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const auto ci = static_cast<std::size_t>(i);
        simulate_centre(config, *plan.per_centre[ci], ci, run, [&](long day) { ++m(i, day - 1); });
    }
    for (Eigen::Index t = 1; t < m.cols(); ++t) m.col(t) += m.col(t - 1);
    return m;
}

std::vector<CentreEvents> trajectory_events(const TrialConfig& config,
                                            const TrajectoryMatrix& trajectory)
{
    if (trajectory.rows() != static_cast<Eigen::Index>(config.centres.size()))
    {
        throw DomainError("trajectory rows do not match the centre list");
    }
    std::vector<CentreEvents> out;
    out.reserve(config.centres.size());
    for (Eigen::Index i = 0; i < trajectory.rows(); ++i)
    {
        const auto& c = config.centres[static_cast<std::size_t>(i)];
        CentreEvents ev{c.id, c.group, c.activation_day, {}};
        int previous = 0;
        for (Eigen::Index t = 0; t < trajectory.cols(); ++t)
        {
            for (int k = previous; k < trajectory(i, t); ++k) ev.event_days.push_back(t + 1);
            previous = trajectory(i, t);
        }
        out.push_back(std::move(ev));
    }
    return out;
}

double EnsembleSummary::prob_success(long day) const
{
    if (completion_day.size() == 0) return 0.0;
    const auto hits = (completion_day >= 0 && completion_day <= day).count();
    return static_cast<double>(hits) / static_cast<double>(completion_day.size());
}

EnsembleSummary simulate_ensemble(const TrialConfig& config, long runs, double confidence, int workers)
{
    validate(config);
    if (runs < 1) throw DomainError("ensemble: runs must be >= 1");
    if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("confidence must lie in (0, 1)");

    const Plan plan = make_plan(config);
    const long horizon = config.horizon;
    EnsembleSummary out;
    out.confidence = confidence;
    out.global = Eigen::MatrixXi::Zero(runs, horizon);
    out.completion_day = Eigen::ArrayXi::Constant(runs, -1);

    parallel_for(runs, workers, [&](long run) {
        auto row = out.global.row(run);
        for (std::size_t i = 0; i < config.centres.size(); ++i)
        {
            simulate_centre(config, *plan.per_centre[i], i, static_cast<std::uint64_t>(run),
                            [&](long day) { ++row(day - 1); });
        }
        for (long t = 1; t < horizon; ++t) row(t) += row(t - 1);
        for (long t = 0; t < horizon; ++t)
        {
            if (row(t) >= config.target)
            {
                out.completion_day[run] = static_cast<int>(t + 1);
                break;
            }
        }
    });

    out.mean = out.global.cast<double>().colwise().mean().transpose().array();
    out.median.resize(horizon);
    out.lower.resize(horizon);
    out.upper.resize(horizon);
    const auto quantile = [runs](std::vector<int>& v, double p) {
        const auto k = std::clamp<long>(static_cast<long>(std::ceil(p * static_cast<double>(runs))) - 1,
                                        0, runs - 1);
        std::nth_element(v.begin(), v.begin() + k, v.end());
        return static_cast<double>(v[static_cast<std::size_t>(k)]);
    };
    std::vector<int> column(static_cast<std::size_t>(runs));
    for (long t = 0; t < horizon; ++t)
    {
        for (long r = 0; r < runs; ++r) column[static_cast<std::size_t>(r)] = out.global(r, t);
        out.median[t] = quantile(column, 0.5);
        out.lower[t] = quantile(column, 0.5 * (1.0 - confidence));
        out.upper[t] = quantile(column, 0.5 * (1.0 + confidence));
    }
    return out;
}

}  // namespace pgrecruit
