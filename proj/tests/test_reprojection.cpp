#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pgrecruit/errors.hpp"
#include "pgrecruit/reprojection.hpp"
#include "pgrecruit/simulator.hpp"

using namespace pgrecruit;

namespace
{

const RateFunction kDecay = RateFunction::exponential_decay(2.5, 0.2, 400.0);

TrialConfig decay_trial(std::uint64_t seed, const RateFunction& r = kDecay, int n = 200)
{
    TrialConfig c;
    const double shape = 1.0 / 1.44;
    for (int i = 0; i < n; ++i)
        c.centres.push_back({"c" + std::to_string(i), "", shape, shape / 0.02, std::floor(120.0 * i / n)});
    c.schedule = RateSchedule(r);
    c.horizon = 1500;
    c.target = 1000;
    c.seed = seed;
    return c;
}

struct Trial
{
    std::vector<CentreEvents> events;
    long truth = -1;
};

Trial run_trial(const TrialConfig& c)
{
    const TrajectoryMatrix m = simulate_trial(c);
    Trial t;
    t.events = trajectory_events(c, m);
    const Eigen::VectorXi global = m.colwise().sum();
    for (Eigen::Index d = 0; d < global.size(); ++d)
        if (global[d] >= c.target)
        {
            t.truth = static_cast<long>(d + 1);
            break;
        }
    return t;
}

std::vector<CentreEvents> truncate(std::vector<CentreEvents> events, double interim)
{
    for (auto& c : events)
        c.event_days.erase(std::remove_if(c.event_days.begin(), c.event_days.end(),
                                          [&](long d) { return d > interim; }),
                           c.event_days.end());
    return events;
}

}  // namespace

TEST_CASE("report invariants and interim truncation")
{
    const Trial t = run_trial(decay_trial(5));
    for (const Strategy& s : {Strategy::all_data(), Strategy::window(60.0),
                              Strategy::timedep_known(RateSchedule(kDecay)),
                              Strategy::timedep_fit(RateFamily::exponential_decay(2.5, 400.0, 0.002))})
    {
        const ReprojectionReport r = reproject(t.events, 200.0, 500.0, 1000, s);
        const ReprojectionReport cut = reproject(truncate(t.events, 200.0), 200.0, 500.0, 1000, s);
        CHECK(r.observed == cut.observed);
        CHECK(r.fit.log_likelihood == cut.fit.log_likelihood);
        REQUIRE(r.completion.mean_day.has_value());
        REQUIRE(r.completion.lower_day.has_value());
        REQUIRE(r.completion.upper_day.has_value());
        CHECK(*r.completion.lower_day <= *r.completion.mean_day);
        CHECK(*r.completion.mean_day <= *r.completion.upper_day);
        CHECK(r.prob_success >= 0.0);
        CHECK(r.prob_success <= 1.0);
        CHECK(r.forecast.times[0] == 200.0);
        CHECK(r.forecast.mean[0] == static_cast<double>(r.observed));
    }
}

TEST_CASE("target already reached")
{
    const Trial t = run_trial(decay_trial(6));
    const ReprojectionReport r = reproject(t.events, 300.0, 400.0, 50, Strategy::all_data());
    CHECK(r.prob_success == 1.0);
    REQUIRE(r.completion.mean_day.has_value());
    CHECK(*r.completion.mean_day == 300.0);
    CHECK(*r.completion.upper_day == 300.0);
}

TEST_CASE("posterior conditioning")
{
    const std::vector<CentreEvents> centres{{"a", "", 0.0, {}}, {"b", "", 0.0, {}}};
    FitResult fit;
    fit.shape = 2.0;
    fit.rate = 100.0;
    const Eigen::ArrayXd grid = daily_grid(100.0, 200.0);
    const RateSchedule flat;

    const EnrollmentData none{{{"a", 0, 0.0}, {"b", 0, 0.0}}};
    const RegionForecast prior =
        forward_forecast_posterior(fit, none, centres, flat, 100.0, grid, 0.8, Conditioning::prior);
    const RegionForecast same =
        forward_forecast_posterior(fit, none, centres, flat, 100.0, grid, 0.8, Conditioning::posterior);
    CHECK(prior.mean[100] == doctest::Approx(2.0 * 0.02 * 100.0).epsilon(1e-14));
    CHECK(same.mean[100] == prior.mean[100]);
    CHECK(same.variance[100] == prior.variance[100]);

    const EnrollmentData idle{{{"a", 0, 100.0}, {"b", 0, 100.0}}};
    const RegionForecast shrunk = forward_forecast_posterior(fit, idle, centres, flat, 100.0, grid, 0.8);
    CHECK(shrunk.mean[100] < prior.mean[100]);

    const EnrollmentData busy{{{"a", 5000, 10000.0}, {"b", 3000, 10000.0}}};
    const RegionForecast rich = forward_forecast_posterior(fit, busy, centres, flat, 100.0, grid, 0.8);
    CHECK(rich.mean[100] == doctest::Approx((0.5 + 0.3) * 100.0).epsilon(0.05));
}

TEST_CASE("stationary data: strategies agree")
{
    const Trial t = run_trial(decay_trial(12, RateFunction::constant()));
    const auto a = reproject(t.events, 200.0, 600.0, 1000, Strategy::all_data());
    const auto w = reproject(t.events, 200.0, 600.0, 1000, Strategy::window(90.0));
    const auto k = reproject(t.events, 200.0, 600.0, 1000, Strategy::timedep_known(RateSchedule()));
    REQUIRE(a.completion.mean_day.has_value());
    REQUIRE(w.completion.mean_day.has_value());
    CHECK(*k.completion.mean_day == *a.completion.mean_day);
    CHECK(std::fabs(*w.completion.mean_day - *a.completion.mean_day) <= 0.1 * *a.completion.mean_day);
}

TEST_CASE("stationary data: completion interval coverage")
{
    int covered = 0, total = 0;
    for (std::uint64_t rep = 0; rep < 150; ++rep)
    {
        TrialConfig c = decay_trial(500 + rep, RateFunction::constant(), 120);
        c.target = 800;
        const Trial t = run_trial(c);
        if (t.truth < 0) continue;
        const auto r = reproject(t.events, 200.0, 600.0, 800, Strategy::all_data());
        if (!r.completion.lower_day || !r.completion.upper_day) continue;
        ++total;
        covered += (t.truth >= *r.completion.lower_day && t.truth <= *r.completion.upper_day) ? 1 : 0;
    }
    REQUIRE(total >= 140);
    const double rate = static_cast<double>(covered) / total;
    CHECK(rate >= 0.7);
    CHECK(rate <= 0.93);
}

TEST_CASE("under decaying rates the all-data fit is early")
{
    int early = 0;
    const int reps = 20;
    for (std::uint64_t rep = 0; rep < reps; ++rep)
    {
        const Trial t = run_trial(decay_trial(900 + rep));
        REQUIRE(t.truth > 0);
        const auto r = reproject(t.events, 200.0, 500.0, 1000, Strategy::all_data());
        early += *r.completion.mean_day < t.truth ? 1 : 0;
    }
    CHECK(early >= 18);
}

TEST_CASE("reprojection argument checks")
{
    const Trial t = run_trial(decay_trial(1));
    CHECK_THROWS_AS(reproject(t.events, 200.0, 150.0, 1000, Strategy::all_data()), DomainError);
    CHECK_THROWS_AS(reproject(t.events, 0.0, 150.0, 1000, Strategy::all_data()), DomainError);
    CHECK_THROWS_AS(reproject({}, 10.0, 150.0, 1000, Strategy::all_data()), DomainError);
    CHECK_THROWS_AS(Strategy::window(0.0), DomainError);
    CHECK(Strategy::window(60.0).describe() == "window(60)");
}
