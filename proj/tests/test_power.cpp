#include <doctest.h>

#include <cmath>

#include "pgrecruit/errors.hpp"
#include "pgrecruit/power.hpp"

using namespace pgrecruit;

namespace
{

PowerScenario table1(long runs)
{
    PowerScenario s;
    s.m1 = 0.04;
    s.q = 0.5;
    s.length1 = s.length2 = 90.0;
    s.centres1 = s.centres2 = 7;
    s.delta = 0.1;
    s.runs = runs;
    s.seed = 4242;
    s.workers = 4;
    return s;
}

}  // namespace

TEST_CASE("interval count moments")
{
    PowerScenario s = table1(40000);
    const IntervalCounts c = simulate_interval_counts(s, TestKind::poisson_nonparametric);
    const double expected = s.m1 * s.centres1 * s.length1;
    const double se = std::sqrt(expected / static_cast<double>(s.runs));
    CHECK(std::fabs(c.n1.cast<double>().mean() - expected) <= 3.0 * se);
    CHECK(std::fabs(c.n2_h1.cast<double>().mean() - s.q * expected) <= 3.0 * se);
    CHECK(c.centre1.size() == 0);

    s.q = 1.0 - 1e-12;
    const IntervalCounts same = simulate_interval_counts(s, TestKind::poisson_nonparametric);
    const double diff = same.n2_h0.cast<double>().mean() - same.n2_h1.cast<double>().mean();
    CHECK(std::fabs(diff) <= 3.0 * std::sqrt(2.0) * se);
}

TEST_CASE("Poisson-gamma per-centre counts are overdispersed")
{
    PowerScenario s = table1(20000);
    s.shape = 1.0 / 1.44;
    s.centres1 = s.centres2 = 5;
    const IntervalCounts c = simulate_interval_counts(s, TestKind::poisson_gamma);
    REQUIRE(c.centre1.rows() == s.runs);
    REQUIRE(c.centre1.cols() == 5);
    const Eigen::ArrayXd col = c.centre1.col(2).cast<double>().array();
    const double mean = col.mean();
    const double var = (col - mean).square().sum() / static_cast<double>(col.size() - 1);
    const double m = s.m1 * s.length1;
    const double s2 = s.m1 * s.m1 / *s.shape * s.length1 * s.length1;
    CHECK(mean == doctest::Approx(m).epsilon(0.03));
    CHECK(var > 1.5 * mean);
    CHECK(var == doctest::Approx(m + s2).epsilon(0.06));
    CHECK(c.n1.sum() == c.centre1.cast<long>().sum());
}

TEST_CASE("threshold calibration")
{
    Eigen::ArrayXd uniform(10000);
    for (Eigen::Index i = 0; i < uniform.size(); ++i) uniform[i] = (i + 0.5) / uniform.size();
    CHECK(calibrate_threshold(uniform, 0.1) == doctest::Approx(0.1).epsilon(1e-3));

    // Mass at 0.08 is 0.15 > delta, so the threshold drops to 0.02.
    Eigen::ArrayXd lumpy(20);
    lumpy << 0.02, 0.08, 0.08, 0.08, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.5, 0.5, 0.5, 0.5, 0.5, 0.6, 0.6,
        0.7, 0.9, 1.0;
    CHECK(calibrate_threshold(lumpy, 0.1) == 0.02);
    // Nothing below delta has mass above delta, so delta itself is kept.
    Eigen::ArrayXd sparse(10);
    sparse << 0.01, 0.4, 0.4, 0.5, 0.6, 0.6, 0.7, 0.8, 0.9, 1.0;
    CHECK(calibrate_threshold(sparse, 0.1) == 0.1);
}

TEST_CASE("Poisson scenario close to the published table at reduced runs")
{
    const PowerResult r = analyse_power(table1(20000), TestKind::poisson_nonparametric);
    CHECK(r.a_delta == doctest::Approx(0.093).epsilon(0.15));
    CHECK(std::fabs(r.pvalue_h1 - 0.088) <= 0.01);
    CHECK(std::fabs(r.power - 0.729) <= 0.03);
    CHECK(r.pvalue_h0 >= 0.5);
    CHECK(r.pvalue_h0 <= 0.55);
    CHECK(r.type1 <= 0.1);
    CHECK(r.power_se > 0.0);
}

TEST_CASE("calibrated threshold controls Type-I error on fresh data")
{
    PowerScenario s = table1(20000);
    const double a = calibrate_threshold(s, TestKind::poisson_nonparametric);
    s.seed = 999;
    const StatisticSamples fresh = simulate_statistics(s, TestKind::poisson_nonparametric);
    const double rate = (fresh.h0 <= a).cast<double>().mean();
    CHECK(rate <= 0.1 + 2.0 * std::sqrt(0.09 / static_cast<double>(s.runs)));
    CHECK(rate >= 0.05);
}

TEST_CASE("results are reproducible across worker counts")
{
    PowerScenario s = table1(5000);
    s.workers = 1;
    const StatisticSamples a = simulate_statistics(s, TestKind::poisson_parametric);
    s.workers = 3;
    const StatisticSamples b = simulate_statistics(s, TestKind::poisson_parametric);
    CHECK((a.h0 == b.h0).all());
    CHECK((a.h1 == b.h1).all());
}

TEST_CASE("power grows with the number of centres")
{
    double previous = 0.0;
    for (const long n : {4L, 8L, 16L, 32L})
    {
        const PowerResult r = analyse_power(table1(10000).with_centres(n), TestKind::poisson_nonparametric);
        CHECK(r.power >= previous - 0.01);
        previous = r.power;
    }
    CHECK(previous > 0.95);
}

TEST_CASE("minimal centres searches")
{
    const CentreSearch p = min_centres_for_pvalue(table1(20000), TestKind::poisson_nonparametric);
    CHECK(p.target_met);
    CHECK(std::abs(p.centres - 7) <= 1);
    CHECK(p.at_centres.pvalue_h1 <= 0.1);

    const CentreSearch w = min_centres_for_power(table1(20000), TestKind::poisson_nonparametric, 0.8);
    CHECK(std::abs(w.centres - 9) <= 1);
    CHECK(w.at_centres.power >= 0.8);

    PowerScenario pg = table1(3000);
    pg.shape = 1.0 / 1.44;
    const PowerResult at34 = analyse_power(pg.with_centres(34), TestKind::poisson_gamma);
    CHECK(std::fabs(at34.pvalue_h1 - 0.098) <= 0.015);
    const PowerResult at7 = analyse_power(pg, TestKind::poisson_gamma);
    CHECK(at7.pvalue_h1 > p.at_centres.pvalue_h1);
    const CentreSearch g = min_centres_for_pvalue(pg.with_centres(2), TestKind::poisson_gamma, 6);
    CHECK_FALSE(g.target_met);
    CHECK(g.centres == 6);

    const CentreSearch capped = min_centres_for_pvalue(table1(2000), TestKind::poisson_nonparametric, 4);
    CHECK_FALSE(capped.target_met);
    CHECK(capped.centres == 4);
}

TEST_CASE("scenario validation")
{
    PowerScenario s = table1(5000);
    CHECK_NOTHROW(validate(s, TestKind::poisson_nonparametric));
    s.q = 1.5;
    CHECK_THROWS_AS(validate(s, TestKind::poisson_nonparametric), DomainError);
    s = table1(500);
    CHECK_THROWS_AS(validate(s, TestKind::poisson_nonparametric), DomainError);
    s = table1(5000);
    CHECK_THROWS_AS(validate(s, TestKind::poisson_gamma), DomainError);
    s.shape = 0.7;
    s.centres2 = 9;
    CHECK_THROWS_AS(validate(s, TestKind::poisson_gamma), DomainError);
}
