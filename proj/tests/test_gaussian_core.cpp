#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "selectrand/gaussian_core.hpp"
#include "selectrand/numerics.hpp"
#include "selectrand/univariate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace selectrand;

namespace {

LinearizableStatistic make_stat(const Vector& value, const Matrix& cov, int n) {
    LinearizableStatistic s;
    s.value = value;
    s.mean = Vector::Zero(value.size());
    s.cov = cov;
    s.n = n;
    return s;
}

// Median of N(0,1) + 0.5 Exp(1) by bisection on its cdf, integrating over the exponential.
double skewed_median() {
    auto cdf = [](double x) {
        return integrate([x](double e) { return normal_cdf(x - 0.5 * e) * std::exp(-e); }, 0.0, 80.0, 1e-14).value;
    };
    double lo = -2.0, hi = 3.0;
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        (cdf(mid) < 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("decompose examples") {
    Matrix I = Matrix::Identity(3, 3);
    Vector T(3);
    T << 1.5, -2.0, 0.25;
    Vector e1 = Vector::Unit(3, 0);
    auto d = decompose(make_stat(T, I, 10), e1);
    CHECK(d.sigma_eta_sq == doctest::Approx(1.0));
    CHECK(d.V_eta(0) == doctest::Approx(0.0));
    CHECK(d.V_eta(1) == doctest::Approx(-2.0));
    CHECK(d.V_eta(2) == doctest::Approx(0.25));

    Matrix S(2, 2);
    S << 2, 1, 1, 2;
    Vector T2(2);
    T2 << 1, 1;
    auto d2 = decompose(make_stat(T2, S, 10), Vector::Unit(2, 0));
    CHECK(d2.sigma_eta_sq == doctest::Approx(2.0));
    CHECK(d2.V_eta(0) == doctest::Approx(0.0));
    CHECK(d2.V_eta(1) == doctest::Approx(0.5));
    CHECK(d2.eta.dot(S * d2.eta) / d2.sigma_eta_sq == doctest::Approx(1.0));
}

TEST_CASE("decompose reconstruction and errors") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix L = Matrix::Random(4, 4);
        Matrix S = L * L.transpose() + 0.1 * Matrix::Identity(4, 4);
        Vector T = standard_normal_vector(rng, 4);
        Vector eta = standard_normal_vector(rng, 4);
        auto d = decompose(make_stat(T, S, 50), eta);
        CHECK((d.reconstruct() - T).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(std::abs(eta.dot(d.V_eta)) < 1e-9 * (1.0 + T.norm() * eta.norm()));
    }
    Matrix S = Matrix::Zero(2, 2);
    S(0, 0) = 1.0;
    CHECK_THROWS_AS(decompose(make_stat(Vector::Ones(2), S, 5), Vector::Unit(2, 1)), DegenerateContrast);
    Matrix bad(2, 2);
    bad << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(decompose(make_stat(Vector::Ones(2), bad, 5), Vector::Unit(2, 0)), InvalidInput);
}

TEST_CASE("exact pivot reductions") {
    auto d = decompose(make_stat(Vector::Constant(1, 0.3), Matrix::Identity(1, 1), 100), Vector::Ones(1));
    CHECK(exact_pivot(d, SelectionProbabilityFn::always(), 0.3, 100) == doctest::Approx(0.5).epsilon(1e-12));
    for (double mu : {-0.5, 0.0, 0.2})
        CHECK(exact_pivot(d, SelectionProbabilityFn::always(), mu, 100) ==
              doctest::Approx(normal_sf(10.0 * (0.3 - mu))).epsilon(1e-10));

    auto hard = SelectionProbabilityFn::indicator_above(0.2);
    for (double mu : {-1.0, 0.0, 0.3})
        CHECK(exact_pivot(d, hard, mu, 100) == doctest::Approx(nonrandomized_pivot(0.3, 100, mu, 2.0)).epsilon(1e-8));

    auto noise = NoiseDistribution::logistic(0.5);
    auto soft = SelectionProbabilityFn::from_log([&](double t) { return log_survival(noise, 2.0 - 10.0 * t); });
    for (double mu : {-1.0, 0.0, 0.3})
        CHECK(exact_pivot(d, soft, mu, 100) ==
              doctest::Approx(randomized_pivot(0.3, 100, mu, noise, 2.0)).epsilon(1e-8));

    auto prob = SelectionProbabilityFn::from_probability([](double t) { return normal_cdf(t); });
    CHECK(prob(0.0) == doctest::Approx(0.5));
    auto broken = SelectionProbabilityFn::from_probability([](double) { return 1.5; });
    CHECK_THROWS_AS(exact_pivot(d, broken, 0.0, 100), InvalidInput);
}

TEST_CASE("exact pivot is monotone in the hypothesised mean") {
    auto d = decompose(make_stat(Vector::Constant(1, -0.2), Matrix::Constant(1, 1, 2.0), 50), Vector::Ones(1));
    auto noise = NoiseDistribution::logistic(1.0);
    auto q = SelectionProbabilityFn::from_log([&](double t) { return log_survival(noise, 1.0 - 5.0 * t); });
    double prev = -1.0;
    for (double mu = -1.5; mu <= 0.5; mu += 0.05) {
        double p = exact_pivot(d, q, mu, 50);
        CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("exact pivot underflow is reported") {
    auto d = decompose(make_stat(Vector::Constant(1, 0.0), Matrix::Identity(1, 1), 1), Vector::Ones(1));
    auto never = SelectionProbabilityFn::from_log([](double) { return -INFINITY; });
    CHECK_THROWS_AS(exact_pivot(d, never, 0.0, 1), SelectionUnderflow);
}

TEST_CASE("exact pivot is uniform at the truth for a battery of selection rules") {
    // T ~ N(mu, Sigma / n) in R^3, selection depends on eta'T and on V_eta.
    const int n = 50;
    Matrix S(3, 3);
    S << 1.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 0.8;
    Vector mu(3);
    mu << -0.1, 0.2, 0.0;
    Vector eta(3);
    eta << 1.0, -0.5, 0.25;
    Eigen::LLT<Matrix> llt(S / n);
    Matrix L = llt.matrixL();
    double mu_eta = eta.dot(mu);
    auto logistic = NoiseDistribution::logistic(2.0);

    struct Rule {
        const char* name;
        std::function<double(double, const Vector&)> log_q;  // (t, V_eta)
    };
    double rn = std::sqrt(static_cast<double>(n));
    std::vector<Rule> rules{
        {"indicator", [&](double t, const Vector& v) { return rn * (t + 0.3 * v(1)) > 0.2 ? 0.0 : -INFINITY; }},
        {"logistic", [&](double t, const Vector& v) { return log_survival(logistic, 1.0 - rn * (t - v(2))); }},
        {"gaussian", [&](double t, const Vector&) { return normal_log_cdf(rn * t - 1.5); }},
    };
    for (const auto& rule : rules) {
        Rng rng(41);
        std::vector<double> pivots;
        std::vector<double> v1;
        LinearizableStatistic stat = make_stat(Vector::Zero(3), S, n);
        while (pivots.size() < 2400) {
            stat.value = mu + L * standard_normal_vector(rng, 3);
            auto d = decompose(stat, eta);
            if (std::log(uniform_open(rng)) >= rule.log_q(d.eta_T, d.V_eta)) continue;
            Vector V = d.V_eta;
            Vector dir = d.direction;
            auto q = SelectionProbabilityFn::from_log(
                [&, V, dir](double t) {
                    // V_eta is fixed; the rule sees the full T reconstructed from t.
                    Vector full = dir * t + V;
                    Vector v_part = full - dir * eta.dot(full);
                    return rule.log_q(t, v_part);
                },
                std::string(rule.name) == "indicator" ? std::vector<double>{} : std::vector<double>{});
            pivots.push_back(exact_pivot(d, q, mu_eta, n));
            v1.push_back(V(1));
        }
        INFO(rule.name);
        CHECK(ks_uniform_statistic(pivots) < ks_critical_95(pivots.size()));

        // Within quartiles of one coordinate of V_eta.
        std::vector<std::size_t> order(pivots.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v1[a] < v1[b]; });
        for (int qtr = 0; qtr < 4; ++qtr) {
            std::vector<double> bin;
            for (std::size_t k = qtr * order.size() / 4; k < (qtr + 1) * order.size() / 4; ++k)
                bin.push_back(pivots[order[k]]);
            CHECK(ks_uniform_statistic(bin) < ks_critical_99(bin.size()));
        }
    }
}

TEST_CASE("median linearization") {
    std::vector<double> sym;
    for (int i = -50; i <= 50; ++i) sym.push_back(i);
    CHECK(median_linearize(sym).value(0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(median_linearize(std::vector<double>(10, 1.0)), InvalidInput);
    CHECK_THROWS_AS(median_linearize(std::vector<double>(100, 1.0)), DegenerateDensity);

    Rng rng(5);
    std::vector<double> big(100000);
    for (auto& x : big) x = standard_normal(rng);
    CHECK(median_density_estimate(big) == doctest::Approx(normal_pdf(0.0)).epsilon(0.05));
    auto stat = median_linearize(big);
    CHECK(stat.cov(0, 0) == doctest::Approx(1.0 / (4.0 * std::pow(median_density_estimate(big), 2))));
    REQUIRE(stat.influence.has_value());
    CHECK(stat.influence->rows() == 100000);
}

TEST_CASE("median linearization remainder shrinks like n^(-3/4) log n") {
    std::vector<double> normalized;
    for (int n : {1000, 10000}) {
        double total = 0.0;
        const int reps = 300;
        for (int r = 0; r < reps; ++r) {
            Rng rng(derive_seed(77, static_cast<std::uint64_t>(n) * 1000 + r));
            std::vector<double> xs(n);
            for (auto& x : xs) x = standard_normal(rng);
            auto stat = median_linearize(xs, 0.0);
            // Influence terms use the true density so the remainder is the linearization error alone.
            double lin = 0.0;
            for (double x : xs) lin += ((x > 0.0 ? 1.0 : 0.0) - 0.5) / normal_pdf(0.0);
            lin /= n;
            total += std::abs(stat.value(0) - lin);
        }
        double rate = std::pow(n, -0.75) * std::log(static_cast<double>(n));
        normalized.push_back(total / reps / rate);
    }
    // The fitted constant stays bounded (does not grow with n).
    CHECK(normalized[0] < 3.0);
    CHECK(normalized[1] <= normalized[0] * 1.1);
}

TEST_CASE("best median pivot") {
    auto noise = NoiseDistribution::logistic(0.8);
    Rng rng(9);
    std::vector<double> g1(400), g2(400);
    for (auto& x : g1) x = 3.0 + standard_normal(rng);
    for (auto& x : g2) x = standard_normal(rng);
    std::vector<double> s1 = g1;
    std::sort(s1.begin(), s1.end());
    double t1 = 0.5 * (s1[199] + s1[200]);
    double sigma1 = 1.0 / (2.0 * median_density_estimate(g1));
    for (double mu0 : {2.9, 3.0, 3.1}) {
        double p = best_median_pivot(g1, g2, 0.0, noise, mu0);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(p == doctest::Approx(normal_sf(20.0 * (t1 - mu0) / sigma1)).epsilon(0.01));
    }
    CHECK_THROWS_AS(best_median_pivot(g2, g1, 0.0, noise, 0.0), SelectionViolated);
    CHECK_THROWS_AS(best_median_pivot(g1, g2, 0.0, NoiseDistribution::gaussian(1.0), 0.0), InvalidInput);
}

TEST_CASE("best median pivot is uniform under the null with skewed noise") {
    const int n = 500;
    const double m0 = skewed_median();
    auto noise = NoiseDistribution::logistic(0.8);
    std::vector<double> pivots;
    std::size_t attempt = 0;
    while (pivots.size() < 5000) {
        Rng rng(derive_seed(2718, attempt++));
        std::vector<double> g1(n), g2(n);
        for (auto& x : g1) x = standard_normal(rng) - 0.5 * std::log(uniform_open(rng)) - m0;
        for (auto& x : g2) x = standard_normal(rng) - 0.5 * std::log(uniform_open(rng)) - m0;
        double omega = draw(noise, rng);
        std::vector<double> s1 = g1, s2 = g2;
        std::nth_element(s1.begin(), s1.begin() + n / 2, s1.end());
        std::nth_element(s2.begin(), s2.begin() + n / 2, s2.end());
        // Even n: median is the mean of the two middle order statistics.
        auto med = [n](std::vector<double>& s) {
            double hi = s[n / 2];
            double lo = *std::max_element(s.begin(), s.begin() + n / 2);
            return 0.5 * (lo + hi);
        };
        double t1 = med(s1), t2 = med(s2);
        if (!(t1 > t2 + omega / std::sqrt(static_cast<double>(n)))) continue;
        pivots.push_back(best_median_pivot(g1, g2, omega, noise, 0.0));
    }
    CHECK(ks_uniform_statistic(pivots) < ks_critical_95(pivots.size()));
}

TEST_CASE("plug-in density estimate is consistent on selected datasets") {
    auto noise = NoiseDistribution::logistic(0.8);
    double sigma_true = 1.0 / (2.0 * normal_pdf(0.0));
    std::vector<double> errors;
    for (int n : {200, 500, 2000}) {
        double total = 0.0;
        int kept = 0;
        for (std::size_t a = 0; kept < 400; ++a) {
            Rng rng(derive_seed(n, a));
            std::vector<double> g1(n), g2(n);
            for (auto& x : g1) x = standard_normal(rng);
            for (auto& x : g2) x = standard_normal(rng);
            double omega = draw(noise, rng);
            double t1 = median_linearize(g1).value(0);
            double t2 = median_linearize(g2).value(0);
            if (!(t1 > t2 + omega / std::sqrt(static_cast<double>(n)))) continue;
            total += std::abs(1.0 / (2.0 * median_density_estimate(g1)) / sigma_true - 1.0);
            ++kept;
        }
        errors.push_back(total / kept);
    }
    CHECK(errors[1] < errors[0]);
    CHECK(errors[2] < errors[1]);
}

TEST_CASE("bootstrap covariance") {
    Rng rng(12);
    Matrix data(2000, 1);
    for (Index i = 0; i < data.rows(); ++i) data(i, 0) = standard_normal(rng);
    auto mean_stat = [](const Matrix& m) { return Vector(m.colwise().mean().transpose()); };
    Matrix c = bootstrap_cov(data, mean_stat, 400, 1);
    CHECK(c(0, 0) == doctest::Approx(1.0).epsilon(0.1));

    auto const_stat = [](const Matrix&) { return Vector::Constant(2, 3.0); };
    Matrix z = bootstrap_cov(data, const_stat, 100, 1);
    CHECK(z.cwiseAbs().maxCoeff() < 1e-12);

    auto median_stat = [](const Matrix& m) {
        std::vector<double> v(m.data(), m.data() + m.rows());
        std::sort(v.begin(), v.end());
        return Vector::Constant(1, 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]));
    };
    // A single dataset's bootstrap variance of the median fluctuates by ~20%,
    // so average over independent datasets.
    double avg = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        Rng drng(derive_seed(31, rep));
        Matrix d(2000, 1);
        for (Index i = 0; i < d.rows(); ++i) d(i, 0) = standard_normal(drng);
        avg += bootstrap_cov(d, median_stat, 500, rep)(0, 0) / 10.0;
    }
    CHECK(avg == doctest::Approx(std::numbers::pi / 2.0).epsilon(0.15));

    CHECK(bootstrap_cov(data, mean_stat, 200, 9) == bootstrap_cov(data, mean_stat, 200, 9));
    CHECK_THROWS_AS(bootstrap_cov(data, mean_stat, 50, 1), InvalidInput);
    auto failing = [](const Matrix&) -> Vector { throw DegenerateFit("boom"); };
    CHECK_THROWS_AS(bootstrap_cov(data, failing, 100, 1), ResampleError);

    // Two correlated columns keep their dependence under pairs resampling.
    Matrix two(3000, 2);
    for (Index i = 0; i < two.rows(); ++i) {
        double a = standard_normal(rng);
        two(i, 0) = a;
        two(i, 1) = 0.6 * a + 0.8 * standard_normal(rng);
    }
    Matrix c2 = bootstrap_cov(two, mean_stat, 600, 3);
    CHECK(c2(0, 1) == doctest::Approx(0.6).epsilon(0.15));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(c2);
    CHECK(eig.eigenvalues().minCoeff() >= 0.0);
}
