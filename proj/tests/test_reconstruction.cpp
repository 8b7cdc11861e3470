#include <doctest.h>

#include <cmath>
#include <random>

#include "twinbeam/forward_model.hpp"
#include "twinbeam/reconstruction.hpp"
#include "twinbeam/statistics.hpp"
#include "twinbeam/synthetic.hpp"

using namespace twinbeam;

namespace {

TruncationPolicy policy(std::size_t n_max, std::size_t c_max)
{
    TruncationPolicy p;
    p.photon_cutoff = n_max;
    p.count_cutoff = c_max;
    return p;
}

DetectionChannel const kSignal{0.0539, 0.75};
DetectionChannel const kIdler{0.0415, 0.75};

void check_monotone(std::vector<double> const& kl)
{
    for (std::size_t k = 1; k < kl.size(); ++k)
        REQUIRE(kl[k] <= kl[k - 1] + kKlMonotoneSlack);
}

JointDistribution reference_measurement()
{
    auto const p = ideal_pair_distribution(14.5, 60);
    return forward(p, build_kernel(kSignal, policy(60, 20)), build_kernel(kIdler, policy(60, 20))).measured;
}

} // namespace

TEST_CASE("kl_divergence")
{
    auto const f = JointDistribution::from_rows({{0.2, 0.3}, {0.1, 0.4}});
    CHECK(kl_divergence(f, f) == 0.0);

    CHECK(kl_divergence(JointDistribution::from_rows({{1, 0}, {0, 0}}),
                        JointDistribution::from_rows({{0.5, 0.5}, {0, 0}})) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));

    double const expected = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
    CHECK(expected == doctest::Approx(0.5108256237659907).epsilon(1e-15));
    CHECK(kl_divergence(JointDistribution::from_rows({{0.5, 0.5}}),
                        JointDistribution::from_rows({{0.9, 0.1}})) ==
          doctest::Approx(expected).epsilon(1e-15));

    CHECK_THROWS_WITH_AS(kl_divergence(JointDistribution::from_rows({{0.5, 0.5}}),
                                       JointDistribution::from_rows({{1.0, 0.0}})),
                         doctest::Contains("zero prediction"), Error);
}

TEST_CASE("em_step")
{
    SUBCASE("identity kernels reach f in one step")
    {
        auto const f = JointDistribution::from_rows({{0.1, 0.2, 0.05}, {0.0, 0.3, 0.15}, {0.1, 0.0, 0.1}});
        auto const k = build_kernel({1.0, 0.0}, policy(2, 2));
        auto const s0 = initial_state(JointDistribution(Matrix(3, 3, 1.0)), f, k, k);
        auto const s1 = em_step(s0, f, k, k);
        CHECK(s1.iteration == 1);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c)
                CHECK(s1.current(r, c) == doctest::Approx(f(r, c)).epsilon(1e-15));
        CHECK(s1.kl_history.size() == 2);
        CHECK(s1.kl_history[1] == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("zero prediction under observed data")
    {
        // Total loss, no noise: every prediction sits at c = 0.
        auto const k = build_kernel({0.0, 0.0}, policy(3, 1));
        auto const f = JointDistribution::from_rows({{0.5, 0.0}, {0.5, 0.0}});
        CHECK_THROWS_WITH_AS(initial_state(JointDistribution(Matrix(4, 4, 1.0)), f, k, k),
                             doctest::Contains("zero prediction under observed data"), Error);
    }
    SUBCASE("shape mismatch")
    {
        auto const k = build_kernel({1.0, 0.0}, policy(2, 2));
        auto const f = JointDistribution::from_rows({{1.0}});
        CHECK_THROWS_WITH_AS(initial_state(JointDistribution(Matrix(3, 3, 1.0)), f, k, k),
                             doctest::Contains("dimension mismatch"), Error);
    }
}

TEST_CASE("property: an exact fixed point is left unchanged")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 10; ++trial)
    {
        auto const ks = build_kernel({u(rng), u(rng)}, policy(6, 60));
        auto const ki = build_kernel({u(rng), u(rng)}, policy(5, 60));
        Matrix rho(7, 6);
        for (double& v : rho.data())
            v = u(rng);
        auto const rho0 = normalize(JointDistribution(rho));
        Matrix pred = predict_counts(rho0.values(), ks, ki);
        auto const f = normalize(JointDistribution(std::move(pred)));

        auto const s1 = em_step(initial_state(rho0, f, ks, ki), f, ks, ki);
        for (std::size_t r = 0; r < 7; ++r)
            for (std::size_t c = 0; c < 6; ++c)
                CHECK(std::abs(s1.current(r, c) - rho0(r, c)) <= 1e-12);
    }
}

TEST_CASE("property: KL history never increases")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 12; ++trial)
    {
        std::size_t const n = 4 + trial % 5;
        Matrix p(n + 1, n + 1);
        for (double& v : p.data())
            v = u(rng) * u(rng);
        DetectionChannel const cs{0.05 + 0.9 * u(rng), 2.0 * u(rng)};
        DetectionChannel const ci{0.05 + 0.9 * u(rng), 2.0 * u(rng)};
        auto const ks = build_kernel(cs, policy(n, 30));
        auto const ki = build_kernel(ci, policy(n, 30));
        auto const f = forward(normalize(JointDistribution(p)), ks, ki).measured;

        EMConfig config;
        config.max_iterations = 400;
        if (trial % 2 == 1)
        {
            Matrix start(n + 1, n + 1);
            for (double& v : start.data())
                v = 0.01 + u(rng);
            config.initial = InitialGuess::custom;
            config.custom_initial = JointDistribution(start);
        }
        auto const state = reconstruct(f, ks, ki, config, [](EMState const& s) {
            for (double v : s.current.values().data())
                REQUIRE(v >= 0.0);
            REQUIRE(std::abs(s.current.total() - 1.0) < 1e-12);
            return true;
        });
        check_monotone(state.kl_history);
        CHECK(state.stop_reason != StopReason::stagnation);
    }
}

TEST_CASE("reconstruct stopping rules")
{
    SUBCASE("identity kernels converge at iteration 1")
    {
        auto const f = JointDistribution::from_rows({{0.4, 0.1}, {0.2, 0.3}});
        auto const k = build_kernel({1.0, 0.0}, policy(1, 1));
        auto const state = reconstruct(f, k, k, EMConfig{});
        CHECK(state.iteration == 1);
        CHECK(state.converged);
        CHECK(state.stop_reason == StopReason::kl_delta);
    }
    SUBCASE("max_iterations = 1 stops after one step")
    {
        EMConfig config;
        config.max_iterations = 1;
        auto const state = reconstruct(reference_measurement(), kSignal, kIdler, config, policy(60, 20));
        CHECK(state.iteration == 1);
        CHECK_FALSE(state.converged);
        CHECK(state.stop_reason == StopReason::max_iter);
        CHECK(state.kl_history.size() == 2);
    }
    SUBCASE("invalid configuration")
    {
        EMConfig config;
        config.max_iterations = 0;
        CHECK_THROWS_AS(config.check(), Error);
        config.max_iterations = 1;
        config.kl_delta_tol = 0.0;
        CHECK_THROWS_AS(config.check(), Error);
        config.kl_delta_tol = 1e-10;
        config.initial = InitialGuess::custom;
        CHECK_THROWS_AS(config.check(), Error);
    }
}

TEST_CASE("reconstruct from the reference synthetic measurement")
{
    auto const f = reference_measurement();
    SUBCASE("default budget: marginals come back Poissonian")
    {
        EMConfig config; // 10000 iterations, tol 1e-10
        auto const state = reconstruct(f, kSignal, kIdler, config, policy(60, 20));
        check_monotone(state.kl_history);
        auto const [ms, mi] = marginals(state.current);
        CHECK(std::abs(k_coefficient(ms) - 0.997) <= 0.05);
        CHECK(std::abs(k_coefficient(mi) - 1.000) <= 0.05);
        CHECK(validate(state.current).ok());
    }
    SUBCASE("the kl_delta rule is reached with a larger budget")
    {
        EMConfig config;
        config.max_iterations = 100000;
        auto const state = reconstruct(f, kSignal, kIdler, config, policy(60, 20));
        CHECK(state.converged);
        CHECK(state.stop_reason == StopReason::kl_delta);
        auto const [ms, mi] = marginals(state.current);
        CHECK(std::abs(k_coefficient(ms) - 0.997) <= 0.05);
        CHECK(std::abs(k_coefficient(mi) - 1.000) <= 0.05);
        CHECK(covariance_cp(state.current) > covariance_cp(f));
    }
}

TEST_CASE("reconstruct recovers the vacuum")
{
    auto const vacuum = JointDistribution::from_rows({{1.0}});
    auto const ks = build_kernel(kSignal, policy(60, 20));
    auto const ki = build_kernel(kIdler, policy(60, 20));
    auto const f = forward(vacuum, ks, ki).measured;
    // The default tolerance stops near rho(0,0) = 0.965; the limit needs ~7e4 steps.
    EMConfig config;
    config.max_iterations = 100000;
    config.kl_delta_tol = 1e-14;
    auto const state = reconstruct(f, ks, ki, config);
    check_monotone(state.kl_history);
    CHECK(state.current(0, 0) > 0.99);
}

namespace {

double tv_after_logged_run(std::size_t iterations, std::vector<double>& logged)
{
    auto const p = ideal_pair_distribution(14.5, 60);
    auto const ks = build_kernel(kSignal, policy(60, 20));
    auto const ki = build_kernel(kIdler, policy(60, 20));
    auto const f = forward(p, ks, ki).measured;
    EMConfig config;
    config.max_iterations = iterations;
    config.kl_delta_tol = 1e-300;
    auto const state = reconstruct(f, ks, ki, config, [&](EMState const& s) {
        if (s.iteration % 2000 == 0)
            logged.push_back(total_variation(s.current, p));
        return true;
    });
    return total_variation(state.current, p);
}

} // namespace

TEST_CASE("round trip: distance to the true source shrinks along the run")
{
    std::vector<double> logged;
    double const final_tv = tv_after_logged_run(20000, logged);
    REQUIRE(logged.size() >= 5);
    for (std::size_t k = 1; k < logged.size(); ++k)
        CHECK(logged[k] < logged[k - 1]);
    CHECK(final_tv <= logged.back());
}

// EM's maximum-likelihood set is not a single point for 21x21 counts and
// 61x61 unknowns; from a uniform start the iterate approaches the true
// source far too slowly (TV ~0.58 after 1e6 iterations) for this bound.
TEST_CASE("round trip: final distance to the true source below 0.05" * doctest::should_fail())
{
    std::vector<double> logged;
    CHECK(tv_after_logged_run(20000, logged) < 0.05);
}
