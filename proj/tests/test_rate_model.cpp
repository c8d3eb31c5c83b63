#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pgrecruit/errors.hpp"
#include "pgrecruit/rate_model.hpp"

using namespace pgrecruit;

namespace
{

double quadrature(const RateFunction& r, double a, double b)
{
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return r.at(x); }, a, b, 15, 1e-13);
}

const RateFunction kDecay = RateFunction::exponential_decay(2.5, 0.2, 400.0);
const RateFunction kPiecewise =
    RateFunction::piecewise_linear({10.0, 50.0, 120.0}, {1.0, 3.0, 0.5});

}  // namespace

TEST_CASE("rate values")
{
    CHECK(rate_at(RateFunction::constant(), 100.0) == 1.0);
    CHECK(rate_at(kDecay, 0.0) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(rate_at(kDecay, 400.0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(rate_at(kDecay, 1000.0) == 0.2);
    CHECK(rate_at(kDecay, 200.0) == doctest::Approx(std::sqrt(2.5 * 0.2)).epsilon(1e-14));
    CHECK(rate_at(kPiecewise, 0.0) == 1.0);
    CHECK(rate_at(kPiecewise, 30.0) == doctest::Approx(2.0));
    CHECK(rate_at(kPiecewise, 500.0) == 0.5);
}

TEST_CASE("factories reject invalid shapes")
{
    CHECK_THROWS_AS(RateFunction::exponential_decay(0.0, 1.0, 10.0), DomainError);
    CHECK_THROWS_AS(RateFunction::exponential_decay(1.0, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(RateFunction::piecewise_linear({1.0, 1.0}, {1.0, 2.0}), DomainError);
    CHECK_THROWS_AS(RateFunction::piecewise_linear({1.0, 2.0}, {1.0, -2.0}), DomainError);
    CHECK_THROWS_AS(RateFunction::piecewise_linear({}, {}), DomainError);
}

TEST_CASE("cumulative factor against quadrature")
{
    CHECK(cumulative_rate_factor(RateFunction::constant(), 0.0, 10.0, 3.0) == 7.0);
    CHECK(cumulative_rate_factor(kDecay, 0.0, 10.0, 10.0) == 0.0);
    CHECK(cumulative_rate_factor(kDecay, 0.0, 10.0, 25.0) == 0.0);
    CHECK(cumulative_rate_factor(kDecay, 0.0, 400.0, 0.0)
          == doctest::Approx(quadrature(kDecay, 0.0, 400.0)).epsilon(1e-12));
    CHECK(cumulative_rate_factor(kDecay, 0.0, 400.0, 0.0)
          == doctest::Approx(364.2513229096188).epsilon(1e-12));

    for (const auto* r : {&kDecay, &kPiecewise})
    {
        for (const auto& [a, b, u] : {std::tuple{0.0, 600.0, 35.0}, std::tuple{-20.0, 130.0, -5.0},
                                      std::tuple{45.0, 52.0, 0.0}, std::tuple{390.0, 410.0, 399.5}})
        {
            const double from = std::max(a, u);
            CHECK(cumulative_rate_factor(*r, a, b, u)
                  == doctest::Approx(quadrature(*r, from, b)).epsilon(1e-11));
        }
    }
}

TEST_CASE("cumulative factor is additive and monotone")
{
    for (const auto* r : {&kDecay, &kPiecewise})
    {
        for (const double u : {-1.0, 17.0, 230.0})
        {
            const double whole = cumulative_rate_factor(*r, 5.0, 500.0, u);
            const double split =
                cumulative_rate_factor(*r, 5.0, 99.0, u) + cumulative_rate_factor(*r, 99.0, 500.0, u);
            CHECK(std::fabs(whole - split) <= 1e-10);
            CHECK(cumulative_rate_factor(*r, 5.0, 300.0, u) <= cumulative_rate_factor(*r, 5.0, 301.0, u));
            CHECK(cumulative_rate_factor(*r, 5.0, 300.0, u + 1.0) <= cumulative_rate_factor(*r, 5.0, 300.0, u));
        }
    }
}

TEST_CASE("recruitment window")
{
    CHECK(recruitment_window(0.0, 10.0, -1.0) == 10.0);
    CHECK(recruitment_window(0.0, 10.0, 15.0) == 0.0);
    CHECK(recruitment_window(0.0, 10.0, 4.0) == 6.0);
    for (const double u : {-3.0, 0.0, 2.5, 9.9, 10.0, 40.0})
    {
        CHECK(recruitment_window(0.0, 10.0, u)
              == cumulative_rate_factor(RateFunction::constant(), 0.0, 10.0, u));
    }
}

TEST_CASE("schedule resolves groups")
{
    RateSchedule s(kDecay);
    s.set("FR", RateFunction::constant());
    CHECK(s.for_group("FR").is_constant());
    CHECK_FALSE(s.for_group("DE").is_constant());
    CHECK_THROWS_AS(validate(CentreProfile{"c", "g", 0.0, 1.0, 0.0}), DomainError);
}
