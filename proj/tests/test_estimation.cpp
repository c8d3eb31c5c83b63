#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pgrecruit/errors.hpp"
#include "pgrecruit/estimation.hpp"

using namespace pgrecruit;

namespace
{

constexpr double kShape = 1.0 / 1.44;
constexpr double kRate = kShape / 0.02;

// Independent daily Poisson counts with a gamma-distributed centre rate.
std::vector<CentreEvents> daily_events(int n, double shape, double rate, const RateFunction& r,
                                       long days, double activation_spread, std::uint64_t seed)
{
    std::mt19937_64 eng(seed);
    std::vector<CentreEvents> out;
    for (int i = 0; i < n; ++i)
    {
        CentreEvents c;
        c.id = "c" + std::to_string(i);
        c.activation_day = std::floor(activation_spread * i / n);
        const double lambda = std::gamma_distribution<double>(shape, 1.0 / rate)(eng);
        for (long k = static_cast<long>(c.activation_day) + 1; k <= days; ++k)
        {
            const double mu = lambda * r.integral(k - 1.0, static_cast<double>(k));
            const long events = std::poisson_distribution<long>(mu)(eng);
            for (long e = 0; e < events; ++e) c.event_days.push_back(k);
        }
        out.push_back(std::move(c));
    }
    return out;
}

EnrollmentData gamma_poisson_sample(int n, double exposure, double shape, double rate,
                                    std::mt19937_64& eng)
{
    EnrollmentData d;
    for (int i = 0; i < n; ++i)
    {
        const double lambda = std::gamma_distribution<double>(shape, 1.0 / rate)(eng);
        d.records.push_back({"c" + std::to_string(i),
                             std::poisson_distribution<long>(lambda * exposure)(eng), exposure});
    }
    return d;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("log-likelihood term by term")
{
    CHECK(log_likelihood({{{"a", 1, 1.0}}}, 1.0, 1.0)
          == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-14));
    CHECK(log_likelihood({{{"a", 0, 2.0}}}, 1.0, 1.0)
          == doctest::Approx(-std::log(3.0)).epsilon(1e-14));

    const EnrollmentData d{{{"a", 4, 30.0}, {"b", 0, 12.5}, {"c", 9, 90.0}, {"d", 0, 0.0}}};
    double sum = 0.0;
    for (const auto& r : d.records)
    {
        if (r.exposure == 0.0) continue;
        const double one = log_likelihood({{r}}, 0.7, 35.0);
        CHECK(std::fabs(std::exp(one) - pg_pmf(r.count, r.exposure, 0.7, 35.0)) <= 1e-12);
        sum += one;
    }
    CHECK(log_likelihood(d, 0.7, 35.0) == doctest::Approx(sum).epsilon(1e-14));
    CHECK_THROWS_AS(log_likelihood(d, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(log_likelihood({{{"z", 2, 0.0}}}, 1.0, 1.0), DomainError);
}

TEST_CASE("posterior rate is the conjugate update")
{
    const PGParams none = posterior_rate({1.0, 1.0}, 0, 0.0);
    CHECK(none.shape == 1.0);
    CHECK(none.rate == 1.0);
    const PGParams p = posterior_rate({1.0, 1.0}, 3, 2.0);
    CHECK(p.shape == 4.0);
    CHECK(p.rate == 3.0);

    const double alpha = 0.8, beta = 40.0, tau = 55.0;
    const long k = 3;
    const PGParams post = posterior_rate({alpha, beta}, k, tau);
    const double weighted = (alpha / beta) * beta / (beta + tau) + (k / tau) * tau / (beta + tau);
    CHECK(post.shape / post.rate == doctest::Approx(weighted).epsilon(1e-14));
}

TEST_CASE("window restriction")
{
    std::vector<CentreEvents> c{{"full", "", 0.0, {10, 150, 160, 200, 201}},
                                {"half", "", 170.0, {171, 190}},
                                {"late", "", 250.0, {}}};
    const EnrollmentData d = restrict_window(c, 200.0, 60.0);
    REQUIRE(d.records.size() == 3);
    CHECK(d.records[0].exposure == 60.0);
    CHECK(d.records[0].count == 3);
    CHECK(d.records[1].exposure == 30.0);
    CHECK(d.records[1].count == 2);
    CHECK(d.records[2].exposure == 0.0);
    CHECK_THROWS_AS(restrict_window(c, 200.0, 0.0), DomainError);
    CHECK_THROWS_AS(restrict_window({c[2]}, 200.0, 60.0), DomainError);

    // Recount over the raw event list of a decaying-rate trial.
    const auto decay = RateFunction::exponential_decay(2.5, 0.2, 400.0);
    const auto trial = daily_events(200, kShape, kRate, decay, 200, 120.0, 7);
    long raw = 0;
    for (const auto& t : trial)
        for (const long day : t.event_days) raw += (day > 140 && day <= 200) ? 1 : 0;
    CHECK(restrict_window(trial, 200.0, 60.0).total_count() == raw);
}

TEST_CASE("events on the activation day move to the first active day")
{
    CHECK(effective_event_day(5, 5.0) == 6.0);
    CHECK(effective_event_day(9, 5.0) == 9.0);
    CHECK(effective_event_day(3, 4.5) == 5.0);
    const CentreEvents c{"a", "", 10.0, {10, 11, 20}};
    CHECK(count_events(c, 10.0, 11.0) == 2);
    CHECK(count_events(c, 11.0, 20.0) == 1);
}

TEST_CASE("fit recovers parameters across replicated trials")
{
    std::mt19937_64 eng(99);
    std::vector<double> shapes, rates;
    int converged = 0;
    for (int rep = 0; rep < 40; ++rep)
    {
        const FitResult f = fit_pg(gamma_poisson_sample(200, 90.0, kShape, kRate, eng));
        shapes.push_back(f.shape);
        rates.push_back(f.rate);
        converged += f.converged ? 1 : 0;
    }
    CHECK(converged == 40);
    CHECK(median(shapes) == doctest::Approx(kShape).epsilon(0.15));
    CHECK(median(rates) == doctest::Approx(kRate).epsilon(0.15));
}

TEST_CASE("fit is a maximum over a local grid")
{
    std::mt19937_64 eng(5);
    const EnrollmentData d = gamma_poisson_sample(150, 120.0, 1.3, 60.0, eng);
    const FitResult f = fit_pg(d);
    REQUIRE(f.converged);
    CHECK(f.log_likelihood == doctest::Approx(log_likelihood(d, f.shape, f.rate)).epsilon(1e-14));
    for (int i = -10; i <= 10; ++i)
        for (int j = -10; j <= 10; ++j)
        {
            const double a = f.shape * std::exp(0.02 * i);
            const double b = f.rate * std::exp(0.02 * j);
            CHECK(log_likelihood(d, a, b) <= f.log_likelihood + 1e-9);
        }
}

TEST_CASE("equal counts and exposures push the shape to the bound")
{
    EnrollmentData d;
    for (int i = 0; i < 30; ++i) d.records.push_back({"c" + std::to_string(i), 4, 100.0});
    const FitResult f = fit_pg(d);
    CHECK(f.boundary);
    CHECK(f.shape > 1e6);
    CHECK(f.mean_rate() == doctest::Approx(0.04).epsilon(1e-6));
}

TEST_CASE("exposure scaling maps the rate parameter")
{
    std::mt19937_64 eng(11);
    const EnrollmentData d = gamma_poisson_sample(120, 80.0, 0.9, 45.0, eng);
    EnrollmentData scaled = d;
    const double c = 7.0;
    for (auto& r : scaled.records) r.exposure *= c;
    const FitResult a = fit_pg(d);
    const FitResult b = fit_pg(scaled);
    CHECK(b.shape == doctest::Approx(a.shape).epsilon(0.01));
    CHECK(b.rate == doctest::Approx(a.rate * c).epsilon(0.01));
}

TEST_CASE("an idle centre lowers the fitted mean rate")
{
    std::mt19937_64 eng(3);
    EnrollmentData d = gamma_poisson_sample(40, 60.0, 1.1, 50.0, eng);
    const double before = fit_pg(d).mean_rate();
    d.records.push_back({"idle", 0, 60.0});
    CHECK(fit_pg(d).mean_rate() < before);
}

TEST_CASE("fit rejects degenerate data")
{
    CHECK_THROWS_AS(fit_pg({{{"a", 3, 10.0}}}), DomainError);
    CHECK_THROWS_AS(fit_pg({{{"a", 0, 10.0}, {"b", 0, 4.0}}}), DomainError);
    CHECK_THROWS_AS(fit_pg({{{"a", 3, 10.0}, {"b", 1, 0.0}}}), DomainError);
}

TEST_CASE("time-dependent fit with a known rate reduces to the exposure fit")
{
    const auto decay = RateFunction::exponential_decay(2.5, 0.2, 400.0);
    const auto trial = daily_events(200, kShape, kRate, decay, 200, 120.0, 21);
    const FitResult a = fit_pg_timedep(trial, RateFamily::fixed(decay), 140.0, 200.0);
    const FitResult b = fit_pg(exposure_data(trial, RateSchedule(decay), 140.0, 200.0));
    CHECK(a.log_likelihood == doctest::Approx(b.log_likelihood).epsilon(1e-12));
    CHECK(a.shape == doctest::Approx(b.shape).epsilon(1e-9));
    CHECK(a.rate == doctest::Approx(b.rate).epsilon(1e-9));
    CHECK(a.rate_params.empty());
}

TEST_CASE("time-dependent fit recovers the decay rate")
{
    const auto truth = RateFunction::exponential_decay(2.5, 0.2, 400.0);
    const double kappa = std::log(2.5 / 0.2) / 400.0;
    std::vector<double> estimates;
    for (std::uint64_t rep = 0; rep < 12; ++rep)
    {
        const auto trial = daily_events(200, kShape, kRate, truth, 300, 120.0, 1000 + rep);
        const FitResult f =
            fit_pg_timedep(trial, RateFamily::exponential_decay(2.5, 400.0, 0.001), 0.0, 300.0);
        REQUIRE(f.rate_params.size() == 1);
        CHECK(f.converged);
        estimates.push_back(f.rate_params[0]);
        CHECK(f.log_likelihood >= -1e300);
    }
    CHECK(median(estimates) == doctest::Approx(kappa).epsilon(0.25));
}

TEST_CASE("shared windows trigger the identifiability warning")
{
    const auto truth = RateFunction::exponential_decay(2.5, 0.2, 400.0);
    const auto trial = daily_events(60, 1.5, 40.0, truth, 150, 0.0, 4);
    const FitResult f =
        fit_pg_timedep(trial, RateFamily::exponential_decay(2.5, 400.0, 0.004), 50.0, 150.0);
    CHECK_FALSE(f.warnings.empty());
    CHECK_THROWS_AS(fit_pg_timedep(trial, RateFamily::fixed(truth), 10.0, 10.0), DomainError);
}
