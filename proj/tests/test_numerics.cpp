#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "selectrand/numerics.hpp"
#include "selectrand/weighted_gaussian.hpp"

#include <cmath>
#include <vector>

using namespace selectrand;

TEST_CASE("normal log survival agrees with erfc and the asymptotic series") {
    for (double x : {-5.0, -1.0, 0.0, 0.7, 3.0, 8.0, 20.0}) {
        double direct = std::log(0.5 * std::erfc(x / std::sqrt(2.0)));
        CHECK(normal_log_sf(x) == doctest::Approx(direct).epsilon(1e-12));
    }
    // Mills ratio: log sf(x) = log phi(x) - log x + log(1 - 1/x^2 + 3/x^4 - ...)
    for (double x : {40.0, 100.0, 400.0}) {
        double series = normal_log_pdf(x) - std::log(x) + std::log1p(-1.0 / (x * x) + 3.0 / std::pow(x, 4));
        CHECK(normal_log_sf(x) == doctest::Approx(series).epsilon(1e-10));
    }
}

TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {1e-12, 1e-5, 0.025, 0.3, 0.5, 0.8, 0.975, 1 - 1e-9}) {
        double x = normal_quantile(p);
        double back = p < 0.5 ? normal_cdf(x) : 1.0 - normal_sf(x);
        CHECK(back == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
    for (double lp : {-1.0, -30.0, -700.0, -5000.0})
        CHECK(normal_log_sf(normal_isf_log(lp)) == doctest::Approx(lp).epsilon(1e-10));
}

TEST_CASE("truncated normal draws follow the truncated law") {
    Rng rng(7);
    for (auto [lo, hi] : std::vector<std::pair<double, double>>{{1.0, INFINITY}, {-0.5, 0.3}, {12.0, INFINITY},
                                                                {-INFINITY, -9.0}}) {
        std::vector<double> xs(4000);
        for (auto& x : xs) x = truncated_normal(rng, lo, hi);
        double log_mass = normal_log_interval(lo, hi);
        auto cdf = [&](double x) {
            if (x <= lo) return 0.0;
            if (x >= hi) return 1.0;
            return std::exp(normal_log_interval(lo, x) - log_mass);
        };
        for (double x : xs) REQUIRE((x >= lo && x <= hi));
        CHECK(ks_statistic(xs, cdf) < ks_critical_99(xs.size()));
    }
}

TEST_CASE("adaptive quadrature integrates smooth and kinked functions") {
    auto r = integrate([](double x) { return std::exp(-x * x); }, -10.0, 10.0, 1e-14);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
    auto k = integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 1e-12);
    CHECK(k.value == doctest::Approx(0.5 * 0.09 + 0.5 * 0.49).epsilon(1e-9));
}

TEST_CASE("weighted gaussian tail with unit weight is the normal survival") {
    LogWeight one = [](double) { return 0.0; };
    for (double t : {-2.0, 0.0, 1.3, 5.0})
        CHECK(weighted_gaussian_tail(1.0, 2.0, one, t) == doctest::Approx(normal_sf((t - 1.0) / 2.0)).epsilon(1e-10));
    CHECK(weighted_gaussian_log_mass(0.0, 1.0, one) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("weighted gaussian handles selection probabilities far below double range") {
    // Indicator weight t > 60: mass e^{-1800}, tail ratio from the truncated law.
    LogWeight ind = [](double t) { return t > 60.0 ? 0.0 : -INFINITY; };
    double tail = weighted_gaussian_tail(0.0, 1.0, ind, 60.01, {60.0});
    double oracle = std::exp(normal_log_sf(60.01) - normal_log_sf(60.0));
    CHECK(tail == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(weighted_gaussian_log_mass(0.0, 1.0, ind, {60.0}) == doctest::Approx(normal_log_sf(60.0)).epsilon(1e-9));
}

TEST_CASE("weighted gaussian table agrees with direct tails") {
    LogWeight w = [](double t) { return -std::log1p(std::exp(0.5 * (2.0 - 10.0 * t))); };
    WeightedGaussianTable table(-1.0, 0.1, w);
    for (double t : {-1.2, -0.9, -0.5, 0.0, 0.3})
        CHECK(table.tail(t) == doctest::Approx(weighted_gaussian_tail(-1.0, 0.1, w, t)).epsilon(1e-9));
    for (double u : {0.05, 0.5, 0.95}) CHECK(table.cdf(table.quantile(u)) == doctest::Approx(u).epsilon(1e-8));
}

TEST_CASE("ks statistic and mean helpers") {
    std::vector<double> u{0.1, 0.3, 0.5, 0.7, 0.9};
    CHECK(ks_uniform_statistic(u) == doctest::Approx(0.1));
    auto ms = mean_and_se(u);
    CHECK(ms.mean == doctest::Approx(0.5));
    CHECK(sample_variance(u) == doctest::Approx(0.1));
}
