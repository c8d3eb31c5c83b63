// Acceptance run: one line per criterion with the measured values, the
// pinned tolerance and the wall time. Exit status 1 when any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/negative_binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/roots.hpp>

#include "pgrecruit/distributions.hpp"
#include "pgrecruit/forecast.hpp"
#include "pgrecruit/homogeneity.hpp"
#include "pgrecruit/power.hpp"
#include "pgrecruit/reprojection.hpp"
#include "pgrecruit/simulator.hpp"

using namespace pgrecruit;
namespace bm = boost::math;

namespace
{

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::string join(const std::vector<long>& v)
{
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
}

const std::array<double, 9> kQ{0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9};
const std::vector<long> kReferencePvalueCentres{7, 8, 11, 14, 19, 28, 44, 78, 179};

PowerScenario base_scenario(double q, long runs)
{
    PowerScenario s;
    s.q = q;
    s.runs = runs;
    s.seed = 20240607;
    return s;
}

// Shared with the formula criterion, which compares against these searches.
std::vector<long> g_searched_centres;

Outcome distribution_identities()
{
    double worst = 0.0, worst_norm = 0.0;
    for (const double t : {0.1, 1.0, 10.0})
        for (const double alpha : {0.5, 1.0, 5.0})
            for (const double beta : {0.5, 1.0, 5.0})
            {
                const bm::negative_binomial nb(alpha, beta / (beta + t));
                for (long k = 0; k <= 200; ++k)
                    worst = std::max(worst, std::fabs(pg_pmf(k, t, alpha, beta) - bm::pdf(nb, k)));
                // Tail beyond kmax is below 1e-13 for every grid point at this kmax.
                const long kmax = 5000;
                const Eigen::ArrayXd table = pg_pmf_table(kmax, t, {alpha, beta});
                worst_norm = std::max(worst_norm, std::fabs(table.sum() - 1.0));
                worst_norm = std::max(worst_norm, std::fabs(pg_cdf(kmax, {alpha, beta}, t) - 1.0));
            }
    return {worst <= 1e-12 && worst_norm <= 1e-10,
            "max |pmf - NB| = " + fmt("%.2e", worst) + " (tol 1e-12), max |mass - 1| = " +
                fmt("%.2e", worst_norm) + " (tol 1e-10)"};
}

std::vector<CentreProfile> heterogeneous(int n)
{
    std::vector<CentreProfile> c;
    for (int i = 0; i < n; ++i)
    {
        const double shape = 0.6 + 0.37 * (i % 5);
        const double mean = 0.015 + 0.004 * (i % 7);
        c.push_back({"c" + std::to_string(i), "", shape, shape / mean, 3.0 * (i % 11)});
    }
    return c;
}

struct SupDistance
{
    double pmf = 0.0;
    double cdf = 0.0;
};

SupDistance convolution_distance(const std::vector<CentreProfile>& centres, const RateFunction& r, double t)
{
    const MomentPair m = region_moments(centres, RateSchedule(r), t);
    const long kmax = static_cast<long>(m.mean + 40.0 * std::sqrt(m.mean + m.variance)) + 50;
    std::vector<double> exact(static_cast<std::size_t>(kmax) + 1, 0.0);
    exact[0] = 1.0;
    for (const auto& c : centres)
    {
        const double big_r = cumulative_rate_factor(r, 0.0, t, c.activation_day);
        if (big_r <= 0.0) continue;
        const bm::negative_binomial nb(c.shape, c.rate / (c.rate + big_r));
        std::vector<double> next(exact.size(), 0.0);
        for (long j = 0; j <= kmax; ++j)
        {
            const double pj = bm::pdf(nb, j);
            for (long i = 0; i + j <= kmax; ++i) next[i + j] += exact[i] * pj;
        }
        exact.swap(next);
    }
    const PGParams a = pg_approx_params(m);
    const bm::negative_binomial approx(a.shape, a.rate / (a.rate + 1.0));
    SupDistance d;
    double ce = 0.0, ca = 0.0;
    for (long k = 0; k <= kmax; ++k)
    {
        const double pa = bm::pdf(approx, k);
        ce += exact[static_cast<std::size_t>(k)];
        ca += pa;
        d.pmf = std::max(d.pmf, std::fabs(exact[static_cast<std::size_t>(k)] - pa));
        d.cdf = std::max(d.cdf, std::fabs(ce - ca));
    }
    return d;
}

Outcome sum_approx_fidelity()
{
    const RateFunction decay = RateFunction::exponential_decay(2.5, 0.2, 400.0);
    const SupDistance d3 = convolution_distance(heterogeneous(3), decay, 120.0);
    const SupDistance d20 = convolution_distance(heterogeneous(20), decay, 120.0);
    return {d3.pmf <= 5e-3 && d20.pmf <= 1e-3,
            "pmf sup-distance N=3 " + fmt("%.2e", d3.pmf) + " (tol 5e-3), N=20 " + fmt("%.2e", d20.pmf) +
                " (tol 1e-3); cdf sup-distance N=3 " + fmt("%.2e", d3.cdf) + ", N=20 " + fmt("%.2e", d20.cdf)};
}

Outcome calibrated_power()
{
    const PowerResult r = analyse_power(base_scenario(0.5, 100000), TestKind::poisson_nonparametric);
    const bool pass = std::fabs(r.a_delta - 0.093) <= 0.01 && std::fabs(r.pvalue_h1 - 0.088) <= 0.01 &&
                      std::fabs(r.power - 0.729) <= 0.02;
    return {pass, "a = " + fmt("%.4f", r.a_delta) + " (0.093 +-0.01), Pvalue_H1 = " + fmt("%.4f", r.pvalue_h1) +
                      " (0.088 +-0.01), Power = " + fmt("%.4f", r.power) + " (0.729 +-0.02), Pvalue_H0 = " +
                      fmt("%.4f", r.pvalue_h0)};
}

Outcome centre_vector()
{
    g_searched_centres.clear();
    bool pass = true;
    for (std::size_t i = 0; i < kQ.size(); ++i)
    {
        const CentreSearch s =
            min_centres_for_pvalue(base_scenario(kQ[i], 100000), TestKind::poisson_nonparametric);
        g_searched_centres.push_back(s.centres);
        pass = pass && s.target_met && std::labs(s.centres - kReferencePvalueCentres[i]) <= 1;
    }
    return {pass, "N = " + join(g_searched_centres) + " vs " + join(kReferencePvalueCentres) + " (+-1 each)"};
}

Outcome power_centre_rows()
{
    bool pass = true;
    std::string detail;
    for (const auto& [q, expected] : std::vector<std::pair<double, long>>{{0.5, 9}, {0.8, 62}})
    {
        const CentreSearch s =
            min_centres_for_power(base_scenario(q, 100000), TestKind::poisson_nonparametric, 0.8);
        const double power = s.at_centres.power;
        pass = pass && s.target_met && std::labs(s.centres - expected) <= 1 && std::fabs(power - 0.8) <= 0.03;
        detail += (detail.empty() ? "" : "; ") + fmt("q=%.1f: ", q) + "N = " + std::to_string(s.centres) +
                  " (" + std::to_string(expected) + " +-1), power " + fmt("%.4f", power) + " (0.80 +-0.03)";
    }
    return {pass, detail};
}

Outcome pg_power_rows()
{
    bool pass = true;
    std::string detail;
    for (const auto& [q, n, expected] :
         std::vector<std::tuple<double, long, double>>{{0.5, 34, 0.657}, {0.7, 109, 0.663}})
    {
        PowerScenario s = base_scenario(q, 20000).with_centres(n);
        s.shape = 1.0 / 1.44;
        const PowerResult r = analyse_power(s, TestKind::poisson_gamma);
        pass = pass && std::fabs(r.power - expected) <= 0.03;
        detail += (detail.empty() ? "" : "; ") + fmt("q=%.1f", q) + " N=" + std::to_string(n) + ": power " +
                  fmt("%.4f", r.power) + " (" + fmt("%.3f", expected) + " +-0.03), a = " +
                  fmt("%.4f", r.a_delta) + ", Pvalue_H1 = " + fmt("%.4f", r.pvalue_h1);
    }
    return {pass, detail + "; 2e4 runs"};
}

// Smallest real N with Phi(E[X]/sd[X]) = delta, E and Var of the
// statistic written out for U1 = U2 = N L.
double rederived_centres(double q, double m1, double length, double delta, double variance_factor)
{
    const double z = bm::quantile(bm::normal(), delta);
    auto gap = [&](double n) {
        const double u = n * length;
        const double mean = 0.5 * u * m1 * (q - 1.0);
        const double sd = std::sqrt(variance_factor * 0.5 * u * m1 * (1.0 + q));
        return mean / sd - z;
    };
    bm::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iterations = 200;
    const auto [lo, hi] = bm::tools::bisect(gap, 1e-6, 1e7, tol, iterations);
    return 0.5 * (lo + hi);
}

Outcome formulas()
{
    bool exact = true;
    std::vector<long> analytic;
    for (const double q : kQ)
    {
        const long np = required_centres_nonparam(q, 0.04, 90.0, 0.1);
        const long p = required_centres_param(q, 0.04, 90.0, 0.1);
        const double rn = rederived_centres(q, 0.04, 90.0, 0.1, 1.0);
        const double rp = rederived_centres(q, 0.04, 90.0, 0.1, 1.5);
        exact = exact && np == static_cast<long>(std::ceil(rn)) && p == static_cast<long>(std::ceil(rp)) &&
                std::fabs(rp / rn - 1.5) <= 1e-9;
        analytic.push_back(np);
    }
    const std::vector<long>& mc = g_searched_centres.empty() ? kReferencePvalueCentres : g_searched_centres;
    long worst_mc = 0, worst_reference = 0;
    std::string offenders;
    for (std::size_t i = 0; i + 1 < kQ.size(); ++i)
    {
        worst_mc = std::max(worst_mc, std::labs(analytic[i] - mc[i]));
        const long d = std::labs(analytic[i] - kReferencePvalueCentres[i]);
        worst_reference = std::max(worst_reference, d);
        if (d > 2 || std::labs(analytic[i] - mc[i]) > 2) offenders += fmt(" q=%.2f", kQ[i]);
    }
    // Gated on the reference Monte Carlo curve; this run's search is shown for reference.
    const bool pass = exact && analytic.front() == 6 && analytic.back() == 174 && worst_reference <= 2;
    return {pass, std::string("analytic N = ") + join(analytic) + (exact ? " matches" : " DIFFERS from") +
                      " re-derivation; max |analytic - MC| for q<=0.85: " + std::to_string(worst_reference) +
                      " vs reference curve (tol 2), " + std::to_string(worst_mc) + " vs this run's search" +
                      (offenders.empty() ? "" : "; gap above 2 at" + offenders)};
}

TrialConfig decay_trial(std::uint64_t seed, long horizon)
{
    TrialConfig c;
    const double shape = 1.0 / 1.44;
    for (int i = 0; i < 200; ++i)
    {
        char id[8];
        std::snprintf(id, sizeof id, "c%03d", i);
        c.centres.push_back({id, "", shape, shape / 0.02, std::floor(120.0 * i / 200.0)});
    }
    c.schedule = RateSchedule(RateFunction::exponential_decay(2.5, 0.2, 400.0));
    c.horizon = horizon;
    c.target = 1000;
    c.seed = seed;
    return c;
}

Outcome simulator_vs_analytic()
{
    const TrialConfig c = decay_trial(77, 400);
    const EnsembleSummary e = simulate_ensemble(c, 10000, 0.8);
    double worst = 0.0, inside = 0.0, total = 0.0;
    std::string means;
    for (const long t : {100L, 200L, 300L, 400L})
    {
        const double analytic = region_moments(c.centres, c.schedule, static_cast<double>(t)).mean;
        const Eigen::Index col = t - 1;
        worst = std::max(worst, std::fabs(e.mean[col] / analytic - 1.0));
        means += fmt(" %.1f", e.mean[col]) + fmt("/%.1f", analytic);
        for (Eigen::Index run = 0; run < e.global.rows(); ++run)
        {
            const double v = e.global(run, col);
            inside += (v >= e.lower[col] && v <= e.upper[col]) ? 1.0 : 0.0;
            total += 1.0;
        }
    }
    const double coverage = inside / total;
    return {worst <= 0.01 && std::fabs(coverage - 0.8) <= 0.02,
            "max relative mean error " + fmt("%.4f", worst) + " (tol 0.01), band coverage " +
                fmt("%.4f", coverage) + " (0.80 +-0.02); sim/analytic at t=100..400:" + means};
}

struct Replicate
{
    long truth = -1;
    std::vector<CentreEvents> events;
};

Replicate replicate(std::uint64_t seed)
{
    const TrialConfig c = decay_trial(seed, 1500);
    const TrajectoryMatrix m = simulate_trial(c);
    Replicate r;
    r.events = trajectory_events(c, m);
    const Eigen::VectorXi global = m.colwise().sum();
    for (Eigen::Index d = 0; d < global.size(); ++d)
        if (global[d] >= c.target)
        {
            r.truth = static_cast<long>(d + 1);
            break;
        }
    return r;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

constexpr int kReplicates = 200;
constexpr std::uint64_t kReplicateSeed = 31000;

Outcome reprojection_ordering()
{
    const RateSchedule known(RateFunction::exponential_decay(2.5, 0.2, 400.0));
    std::vector<double> err_known, err_window, err_all;
    int early = 0, used = 0;
    for (int rep = 0; rep < kReplicates; ++rep)
    {
        const Replicate t = replicate(kReplicateSeed + static_cast<std::uint64_t>(rep));
        if (t.truth < 0) continue;
        const auto k = reproject(t.events, 200.0, 700.0, 1000, Strategy::timedep_known(known));
        const auto w = reproject(t.events, 200.0, 700.0, 1000, Strategy::window(60.0));
        const auto a = reproject(t.events, 200.0, 700.0, 1000, Strategy::all_data());
        if (!k.completion.mean_day || !w.completion.mean_day || !a.completion.mean_day) continue;
        ++used;
        err_known.push_back(std::fabs(*k.completion.mean_day - t.truth));
        err_window.push_back(std::fabs(*w.completion.mean_day - t.truth));
        err_all.push_back(std::fabs(*a.completion.mean_day - t.truth));
        early += *a.completion.mean_day < t.truth ? 1 : 0;
    }
    const double mk = median(err_known), mw = median(err_window), ma = median(err_all);
    const double early_rate = static_cast<double>(early) / used;
    return {used == kReplicates && mk < mw && mw < ma && early_rate > 0.9,
            "median |error| known-r " + fmt("%.1f", mk) + " < window-60 " + fmt("%.1f", mw) + " < all-data " +
                fmt("%.1f", ma) + "; all-data early in " + fmt("%.3f", early_rate) + " (> 0.9); " +
                std::to_string(used) + "/" + std::to_string(kReplicates) + " replicates"};
}

Outcome detection()
{
    int flagged = 0;
    for (int rep = 0; rep < kReplicates; ++rep)
    {
        const Replicate t = replicate(kReplicateSeed + static_cast<std::uint64_t>(rep));
        const TestReport r = poisson_nonparametric_test(interval_totals(t.events, 80.0, 140.0),
                                                        interval_totals(t.events, 140.0, 200.0), 0.1);
        flagged += r.verdict == Verdict::rate_decreased ? 1 : 0;
    }
    const double rate = static_cast<double>(flagged) / kReplicates;
    return {rate > 0.8, "rate-decreased in " + fmt("%.3f", rate) + " of " + std::to_string(kReplicates) +
                            " replicates (> 0.8)"};
}

struct Criterion
{
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "distribution identities", 1.0, distribution_identities},
        {2, "sum approximation fidelity", 10.0, sum_approx_fidelity},
        {3, "calibrated power at q=0.5, N=7", 120.0, calibrated_power},
        {4, "p-value centre vector", 1800.0, centre_vector},
        {5, "power-0.8 centre rows", 1800.0, power_centre_rows},
        {6, "Poisson-gamma power rows", 1800.0, pg_power_rows},
        {7, "closed-form centre counts", 1.0, formulas},
        {8, "simulator vs analytic", 120.0, simulator_vs_analytic},
        {9, "reprojection ordering", 900.0, reprojection_ordering},
        {10, "decline detection", 900.0, detection},
    };
    int failed = 0;
    for (const auto& c : criteria)
    {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = c.run();
        }
        catch (const std::exception& e)
        {
            o = {false, std::string("error: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = seconds <= c.budget_seconds;
        const bool pass = o.pass && in_budget;
        failed += pass ? 0 : 1;
        std::printf("%s %2d %s: %s [%.1f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), seconds, c.budget_seconds, in_budget ? "" : ", over budget");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
