#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "twinbeam/quasi.hpp"
#include "twinbeam/synthetic.hpp"

using namespace twinbeam;

namespace {

double max_abs(Matrix const& m)
{
    double r = 0.0;
    for (double v : m.data())
        r = std::max(r, std::abs(v));
    return r;
}

JointDistribution random_distribution(std::mt19937_64& rng, std::size_t rows, std::size_t cols)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& v : m.data())
        v = u(rng);
    return normalize(JointDistribution(std::move(m)));
}

} // namespace

TEST_CASE("laguerre")
{
    for (double a : {0.0, 3.0, 49.0})
        for (double x : {0.0, 1.5, 70.0})
            CHECK(laguerre(0, a, x) == 1.0);
    CHECK(laguerre(1, 0.0, 2.0) == -1.0);
    double const expected = oracle::laguerre_series(5, 49, 10.0);
    CHECK(expected == doctest::Approx(3070100.0 / 3.0).epsilon(1e-14));
    CHECK(laguerre(5, 49.0, 10.0) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("property: recurrence matches the explicit series for n, a <= 60, x in [0, 200]")
{
    double worst = 0.0;
    for (std::size_t a = 0; a <= 60; ++a)
        for (std::size_t n = 0; n <= 60; ++n)
            for (double x = 0.0; x <= 200.0; x += 2.5)
            {
                double const expected = oracle::laguerre_series(n, a, x);
                double const got = laguerre(n, static_cast<double>(a), x);
                // exact roots, e.g. L_2^23(30), come back as 50-digit round-off
                if (std::abs(expected) < 1e-40)
                {
                    CHECK(std::abs(got) < 1e-12);
                    continue;
                }
                worst = std::max(worst, std::abs(got - expected) / std::abs(expected));
            }
    CHECK(worst < 1e-8);
}

TEST_CASE("laguerre_row agrees with laguerre and survives large arguments")
{
    auto const row = laguerre_row(60, 49.0, 30.0);
    for (std::size_t n = 0; n <= 60; ++n)
    {
        double const direct = laguerre(n, 49.0, 30.0);
        CHECK(row.sign[n] == (direct > 0 ? 1 : -1));
        CHECK(std::exp(row.log_abs[n]) == doctest::Approx(std::abs(direct)).epsilon(1e-12));
    }
    // L_400^0(5000) is far beyond double range; its log is not.
    auto const big = laguerre_row(400, 0.0, 5000.0);
    auto const exact = oracle::laguerre_series_exact(400, 0, oracle::real(5000));
    CHECK(std::isfinite(big.log_abs[400]));
    CHECK(big.log_abs[400] == doctest::Approx(static_cast<double>(log(abs(exact)))).epsilon(1e-12));
    CHECK(big.sign[400] == (exact > 0 ? 1 : -1));
}

TEST_CASE("ordering parameter validation")
{
    OrderingParams p{1.0, 50};
    CHECK_THROWS_AS(p.check(), Error);
    p = {-1.2, 50};
    CHECK_THROWS_AS(p.check(), Error);
    p = {0.3, 0};
    CHECK_THROWS_AS(p.check(), Error);
    std::vector<double> const w{1.0};
    auto const vacuum = JointDistribution::from_rows({{1.0}});
    CHECK_THROWS_AS(intensity_distribution(vacuum, {1.0, 1}, w, w), Error);
    std::vector<double> const bad{0.0, 1.0};
    CHECK_THROWS_AS(intensity_distribution(vacuum, {0.0, 1}, bad, w), Error);
}

TEST_CASE("intensity_distribution")
{
    SUBCASE("vacuum at W = 1, M = 1, s = 0 reduces to the single zero term")
    {
        std::vector<double> const w{1.0};
        auto const grid = intensity_distribution(JointDistribution::from_rows({{1.0}}), {0.0, 1}, w, w);
        CHECK(grid.values(0, 0) == doctest::Approx(4.0 * std::exp(-4.0)).epsilon(1e-14));
        CHECK(grid.values(0, 0) == doctest::Approx(0.07326).epsilon(1e-4));
    }
    SUBCASE("cells agree with the extended-precision direct series")
    {
        std::mt19937_64 rng(31);
        auto const rho = random_distribution(rng, 6, 5);
        std::vector<double> values(rho.values().data().begin(), rho.values().data().end());
        std::vector<double> const ws{0.2, 1.0, 3.5, 9.0}, wi{0.5, 2.0, 6.0};
        for (double s : {-0.5, 0.0, 0.3, 0.8})
            for (std::size_t m : {1, 4, 50})
                for (auto weight : {GammaWeight::single, GammaWeight::squared})
                {
                    auto const grid = intensity_distribution(rho, {s, m}, ws, wi, weight);
                    int const power = weight == GammaWeight::squared ? 2 : 1;
                    for (std::size_t a = 0; a < ws.size(); ++a)
                        for (std::size_t b = 0; b < wi.size(); ++b)
                        {
                            double const expected =
                                oracle::intensity_point(values, 6, 5, ws[a], wi[b], s, m, power);
                            CHECK(std::abs(grid.values(a, b) - expected) <= 1e-10 * std::abs(expected) + 1e-300);
                        }
                }
    }
    SUBCASE("ideal source at M = 50 agrees with the oracle near the diagonal")
    {
        auto const rho = ideal_pair_distribution(14.5, 60);
        std::vector<double> values(rho.values().data().begin(), rho.values().data().end());
        std::vector<double> const w{4.0, 12.0, 25.0, 40.0};
        auto const grid = intensity_distribution(rho, {0.3, 50}, w, w);
        double const scale = max_abs(grid.values);
        for (std::size_t a = 0; a < w.size(); ++a)
            for (std::size_t b = 0; b < w.size(); ++b)
            {
                double const expected = oracle::intensity_point(values, 61, 61, w[a], w[b], 0.3, 50, 1);
                CHECK(std::abs(grid.values(a, b) - expected) <= 1e-9 * scale);
            }
    }
    SUBCASE("arm-symmetric rho gives a symmetric grid")
    {
        std::mt19937_64 rng(8);
        auto const r = random_distribution(rng, 7, 7);
        auto const sym = normalize(JointDistribution([&] {
            Matrix m(7, 7);
            for (std::size_t a = 0; a < 7; ++a)
                for (std::size_t b = 0; b < 7; ++b)
                    m(a, b) = r(a, b) + r(b, a);
            return m;
        }()));
        auto const w = linear_axis(0.1, 10.0, 25);
        auto const grid = intensity_distribution(sym, {0.3, 5}, w, w);
        for (std::size_t a = 0; a < w.size(); ++a)
            for (std::size_t b = 0; b < w.size(); ++b)
                CHECK(std::abs(grid.values(a, b) - grid.values(b, a)) <=
                      1e-10 * std::abs(grid.values(a, b)) + 1e-300);
    }
}

TEST_CASE("quasi_distribution")
{
    auto const ideal = ideal_pair_distribution(14.5, 60);
    auto const alpha = linear_axis(0.05, 8.0, 40);

    SUBCASE("Phi is P(|alpha|^2) / pi^2 at every grid point")
    {
        std::vector<double> w(alpha.size());
        std::transform(alpha.begin(), alpha.end(), w.begin(), [](double a) { return a * a; });
        OrderingParams const params{0.3, 50};
        auto const intensity = intensity_distribution(ideal, params, w, w);
        auto const quasi = quasi_distribution(ideal, params, alpha, alpha);
        for (std::size_t a = 0; a < alpha.size(); ++a)
            for (std::size_t b = 0; b < alpha.size(); ++b)
                CHECK(quasi.values(a, b) ==
                      doctest::Approx(intensity.values(a, b) / (std::numbers::pi * std::numbers::pi))
                          .epsilon(1e-15));
    }
    SUBCASE("ideal source at s = 0.3, M = 50 has negative regions")
    {
        auto const grid = quasi_distribution(ideal, {0.3, 50}, alpha, alpha);
        CHECK(grid.min_value < 0.0);
        CHECK(has_negativity(grid));
        CHECK(grid.negative_fraction > 0.0);
        CHECK(grid.negative_fraction < 1.0);
    }
    SUBCASE("anti-normal ordering is nonnegative for every test state")
    {
        std::mt19937_64 rng(44);
        std::vector<JointDistribution> states{ideal, JointDistribution::from_rows({{1.0}}),
                                              product_distribution(thermal_marginal(2.0, 60),
                                                                   poisson_marginal(5.0, 40))};
        for (int k = 0; k < 5; ++k)
            states.push_back(random_distribution(rng, 3 + k, 8 - k));
        for (auto const& rho : states)
            for (std::size_t m : {1, 10, 50})
            {
                auto const grid = quasi_distribution(rho, {-1.0, m}, alpha, alpha);
                CHECK(grid.min_value >= -1e-12 * max_abs(grid.values));
                CHECK_FALSE(has_negativity(grid));
            }
    }
    SUBCASE("squared-gamma weighting shows no negativity for the ideal source")
    {
        auto const grid = quasi_distribution(ideal, {0.3, 50}, alpha, alpha, GammaWeight::squared);
        CHECK_FALSE(has_negativity(grid));
    }
}

TEST_CASE("integrated mass of the single-gamma series is one")
{
    auto const rho = ideal_pair_distribution(14.5, 60);
    auto const w = linear_axis(1e-3, 140.0, 1400);
    auto const grid = intensity_distribution(rho, {0.0, 50}, w, w);
    CHECK(integrated_mass(grid) == doctest::Approx(1.0).epsilon(1e-3));

    auto const alpha = linear_axis(1e-3, 11.0, 800);
    auto const quasi = quasi_distribution(rho, {0.0, 50}, alpha, alpha);
    CHECK(integrated_mass(quasi) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("negativity_threshold_scan")
{
    auto const alpha = linear_axis(0.05, 8.0, 40);
    SUBCASE("ideal source is negative already at s <= 0.3")
    {
        auto const scan = negativity_threshold_scan(ideal_pair_distribution(14.5, 60), 50, alpha, alpha);
        CHECK(scan.s0 <= 0.3);
        CHECK(scan.s0 >= -1.0);
        auto const below = quasi_distribution(ideal_pair_distribution(14.5, 60), {scan.s0 - 0.011, 50},
                                              alpha, alpha);
        CHECK_FALSE(has_negativity(below));
    }
    SUBCASE("vacuum is classical")
    {
        CHECK_THROWS_WITH_AS(negativity_threshold_scan(JointDistribution::from_rows({{1.0}}), 50, alpha, alpha),
                             doctest::Contains("no negativity found"), Error);
    }
    SUBCASE("min value does not increase with s on a dense scan")
    {
        auto const rho = ideal_pair_distribution(14.5, 60);
        std::vector<double> mins;
        double scale = 0.0;
        for (double s = -1.0; s <= 0.99; s += 0.05)
        {
            auto const grid = quasi_distribution(rho, {s, 50}, alpha, alpha);
            mins.push_back(grid.min_value);
            scale = std::max(scale, max_abs(grid.values));
        }
        for (std::size_t k = 1; k < mins.size(); ++k)
            CHECK(mins[k] <= mins[k - 1] + 1e-12 * scale);
    }
}
