#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "selectrand/noise.hpp"
#include "selectrand/numerics.hpp"
#include "selectrand/selectors.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace selectrand;

namespace {

Matrix gaussian_design(Index n, Index p, std::uint64_t seed) {
    Rng rng(seed);
    Matrix X(n, p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < n; ++i) X(i, j) = standard_normal(rng);
    return X;
}

Matrix standardized_design(Index n, Index p, std::uint64_t seed) {
    Matrix X = gaussian_design(n, p, seed);
    for (Index j = 0; j < p; ++j) {
        X.col(j).array() -= X.col(j).mean();
        X.col(j) *= std::sqrt(static_cast<double>(n)) / X.col(j).norm();
    }
    return X;
}

// Independent KKT evaluator for 1/2|y - Xb|^2 + lam |b|_1.
double lasso_kkt_violation(const Matrix& X, const Vector& y, const Vector& beta, double lam) {
    Vector c = X.transpose() * (y - X * beta);
    double worst = 0.0;
    for (Index j = 0; j < beta.size(); ++j) {
        if (std::abs(beta(j)) > 1e-8)
            worst = std::max(worst, std::abs(c(j) - lam * (beta(j) > 0 ? 1.0 : -1.0)));
        else
            worst = std::max(worst, std::max(0.0, std::abs(c(j)) - lam));
    }
    return worst;
}

Vector bernoulli_response(const Matrix& X, const Vector& beta, Rng& rng) {
    Vector eta = X * beta;
    Vector y(X.rows());
    for (Index i = 0; i < X.rows(); ++i) y(i) = uniform_open(rng) < 1.0 / (1.0 + std::exp(-eta(i))) ? 1.0 : 0.0;
    return y;
}

} // namespace

TEST_CASE("lasso null solution above the threshold") {
    Matrix X = gaussian_design(40, 6, 1);
    Rng rng(2);
    Vector y = standard_normal_vector(rng, 40);
    double lmax = (X.transpose() * y).cwiseAbs().maxCoeff();
    auto fit = solve_lasso(X, y, lmax * 1.0001);
    CHECK(fit.active.empty());
    CHECK(fit.beta.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(solve_lasso(X, y, 0.0), InvalidInput);
}

TEST_CASE("lasso on an orthonormal design soft-thresholds") {
    Matrix G = gaussian_design(30, 5, 3);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ() * Matrix::Identity(30, 5);
    Rng rng(4);
    Vector y = 2.0 * standard_normal_vector(rng, 30);
    double lam = 1.1;
    auto fit = solve_lasso(Q, y, lam);
    Vector u = Q.transpose() * y;
    for (Index j = 0; j < 5; ++j) {
        double st = std::copysign(std::max(0.0, std::abs(u(j)) - lam), u(j));
        CHECK(fit.beta(j) == doctest::Approx(st).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("lasso KKT, duality gap and monotone objective") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Matrix X = gaussian_design(50, 12, 100 + seed);
        Rng rng(seed);
        Vector beta = Vector::Zero(12);
        beta.head(3) << 2.0, -1.5, 1.0;
        Vector y = X * beta + standard_normal_vector(rng, 50);
        double lam = 5.0 + seed;
        LassoOptions opt;
        opt.record_trace = true;
        auto fit = solve_lasso(X, y, Vector::Constant(12, lam), opt);
        CHECK(lasso_kkt_violation(X, y, fit.beta, lam) < 1e-7 * (1.0 + lam) * 10);
        CHECK(fit.gap <= 1e-9 * (1.0 + std::abs(fit.objective)));
        for (std::size_t k = 1; k < fit.trace.size(); ++k) CHECK(fit.trace[k] <= fit.trace[k - 1] + 1e-12);
        CHECK(fit.subgrad_inactive.cwiseAbs().maxCoeff() <= 1.0 + 1e-7);
        for (std::size_t a = 0; a < fit.active.size(); ++a)
            CHECK((fit.beta(fit.active[a]) > 0) == (fit.signs(static_cast<Index>(a)) > 0));
    }
}

TEST_CASE("lasso region agrees with re-solving on random responses") {
    Matrix X = gaussian_design(30, 8, 7);
    Rng rng(8);
    Vector beta = Vector::Zero(8);
    beta.head(2) << 3.0, -2.0;
    Vector y = X * beta + standard_normal_vector(rng, 30);
    double lam = 12.0;
    auto base = solve_lasso(X, y, lam);
    REQUIRE(!base.active.empty());
    auto region = lasso_affine_region(X, base.active, base.signs, lam);
    CHECK(region.rows() == static_cast<Index>(base.active.size() + 2 * (8 - base.active.size())));
    int inside = 0;
    for (int trial = 0; trial < 500; ++trial) {
        Vector r = y + 1.5 * standard_normal_vector(rng, 30);
        bool oracle = solve_lasso(X, r, lam).same_selection(base);
        bool member = region.contains(r);
        CHECK(member == oracle);
        inside += member;
    }
    CHECK(inside > 20);
    CHECK(inside < 480);
}

TEST_CASE("empty active set gives the box region") {
    Matrix X = gaussian_design(20, 4, 9);
    auto region = lasso_affine_region(X, {}, Vector(), 2.0);
    REQUIRE(region.rows() == 8);
    Rng rng(10);
    for (int t = 0; t < 200; ++t) {
        Vector r = 0.3 * standard_normal_vector(rng, 20);
        bool box = (X.transpose() * r).cwiseAbs().maxCoeff() <= 2.0;
        CHECK(region.contains(r) == box);
    }
}

TEST_CASE("one-dimensional region is a half-line") {
    Matrix X = gaussian_design(15, 1, 11);
    double lam = 1.0;
    auto region = lasso_affine_region(X, {0}, Vector::Ones(1), lam);
    REQUIRE(region.rows() == 1);
    Rng rng(12);
    for (int t = 0; t < 200; ++t) {
        Vector r = 0.5 * standard_normal_vector(rng, 15);
        double u = X.col(0).dot(r);
        if (std::abs(u - lam) < 1e-9) continue;
        CHECK(region.contains(r) == (u > lam));
    }
}

TEST_CASE("gram region matches the response region") {
    Matrix X = gaussian_design(25, 6, 13);
    IndexSet E{1, 4};
    Vector s(2);
    s << 1.0, -1.0;
    Vector lam = Vector::Constant(6, 1.7);
    auto on_r = lasso_affine_region(X, E, s, lam);
    auto on_u = lasso_gram_region(X.transpose() * X, E, s, lam);
    Rng rng(14);
    for (int t = 0; t < 50; ++t) {
        Vector r = standard_normal_vector(rng, 25);
        CHECK((on_r.slack(r) - on_u.slack(X.transpose() * r)).cwiseAbs().maxCoeff() < 1e-9);
    }
    Matrix Xr = X;
    Xr.col(4) = Xr.col(1);
    CHECK_THROWS_AS(lasso_affine_region(Xr, E, s, lam), RankError);
}

TEST_CASE("square-root lasso") {
    Matrix X = gaussian_design(60, 7, 15);
    Rng rng(16);
    Vector beta = Vector::Zero(7);
    beta.head(2) << 1.0, -0.8;
    Vector y = X * beta + standard_normal_vector(rng, 60);
    double thr = sqrt_lasso_null_threshold(X, y);
    CHECK(thr == doctest::Approx((X.transpose() * y).cwiseAbs().maxCoeff() / y.norm()));
    auto zero = solve_sqrt_lasso(X, y, thr * 1.0001);
    CHECK(zero.active.empty());

    double lam = 0.5 * thr;
    auto fit = solve_sqrt_lasso(X, y, lam);
    REQUIRE(!fit.active.empty());
    Vector r = y - X * fit.beta;
    Vector c = X.transpose() * r / r.norm();
    for (Index j = 0; j < 7; ++j) {
        if (std::abs(fit.beta(j)) > 1e-8)
            CHECK(std::abs(c(j) - lam * (fit.beta(j) > 0 ? 1.0 : -1.0)) < 1e-6);
        else
            CHECK(std::abs(c(j)) <= lam + 1e-6);
    }
    auto scaled = solve_sqrt_lasso(X, 3.5 * y, lam);
    CHECK((scaled.beta - 3.5 * fit.beta).cwiseAbs().maxCoeff() < 1e-6);

    // Objective is minimal against perturbations.
    auto obj = [&](const Vector& b) { return (y - X * b).norm() + lam * b.cwiseAbs().sum(); };
    for (int t = 0; t < 50; ++t) CHECK(obj(fit.beta + 1e-3 * standard_normal_vector(rng, 7)) >= obj(fit.beta) - 1e-12);

    Matrix I = Matrix::Identity(5, 5);
    CHECK_THROWS_AS(solve_sqrt_lasso(I, Vector::Zero(5), 0.1), DegenerateFit);
}

TEST_CASE("restricted logistic MLE") {
    Matrix ones = Matrix::Ones(8, 1);
    Vector half(8);
    half << 1, 0, 1, 0, 1, 0, 1, 0;
    CHECK(logistic_restricted_mle(ones, half)(0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    Vector three(8);
    three << 1, 1, 1, 0, 1, 1, 1, 0;
    CHECK(logistic_restricted_mle(ones, three)(0) == doctest::Approx(std::log(3.0)).epsilon(1e-10));

    Matrix X = standardized_design(400, 3, 17);
    Rng rng(18);
    Vector b(3);
    b << 0.8, -0.4, 0.2;
    Vector y = bernoulli_response(X, b, rng);
    Vector mle = logistic_restricted_mle(X, y);
    Vector pi = (1.0 + (-(X * mle).array()).exp()).inverse().matrix();
    CHECK((X.transpose() * (y - pi)).cwiseAbs().maxCoeff() < 1e-8);

    Matrix sep(6, 1);
    sep << -3, -2, -1, 1, 2, 3;
    Vector ys(6);
    ys << 0, 0, 0, 1, 1, 1;
    CHECK_THROWS_AS(logistic_restricted_mle(sep, ys), SeparationError);
}

TEST_CASE("randomized logistic lasso solver") {
    Matrix X = standardized_design(300, 5, 19);
    Rng rng(20);
    Vector b(5);
    b << 1.0, -0.7, 0.0, 0.0, 0.0;
    Vector y = bernoulli_response(X, b, rng);
    auto noise = NoiseDistribution::logistic(2.0);
    Vector omega(5);
    for (Index j = 0; j < 5; ++j) omega(j) = draw(noise, rng);

    auto huge = solve_randomized_logistic_lasso(X, y, Vector::Constant(5, 1e4), Vector::Zero(5));
    CHECK(huge.active.empty());
    CHECK(huge.beta.cwiseAbs().maxCoeff() == 0.0);

    Vector w = Vector::Constant(5, 1.0);
    auto a = solve_randomized_logistic_lasso(X, y, w, omega);
    auto c = solve_randomized_logistic_lasso(X, y, w, omega, 3.0 * standard_normal_vector(rng, 5));
    CHECK((a.beta - c.beta).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(logistic_kkt_residual(X, y, w, omega, a).cwiseAbs().maxCoeff() < 1e-6 * std::sqrt(300.0));
    CHECK(!a.active.empty());
}

TEST_CASE("logistic region structure and re-solve agreement") {
    const Index n = 5000, p = 5;
    Matrix X = standardized_design(n, p, 21);
    Vector b(p);
    b << 0.5, -0.4, 0.0, 0.0, 0.0;
    Vector w = Vector::Constant(p, 1.0);
    auto noise = NoiseDistribution::logistic(2.0);
    Rng rng(22);
    Vector y = bernoulli_response(X, b, rng);
    Vector omega(p);
    for (Index j = 0; j < p; ++j) omega(j) = draw(noise, rng);
    auto fit = solve_randomized_logistic_lasso(X, y, w, omega);
    REQUIRE(!fit.active.empty());
    auto reg = logistic_region(X, y, fit, w);
    auto k = static_cast<Index>(fit.active.size());
    CHECK(reg.event.rows() == k + 2 * (p - k));
    CHECK((reg.D * reg.Q - reg.C).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((reg.Q - reg.Q.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(reg.Q);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    CHECK(reg.event.contains(reg.T.value, reorder_active_first(omega, reg.active, reg.inactive), 1e-3));

    int agree = 0, inside = 0;
    const int draws = 200;
    for (int t = 0; t < draws; ++t) {
        Vector yf = bernoulli_response(X, b, rng);
        Vector of(p);
        for (Index j = 0; j < p; ++j) of(j) = draw(noise, rng);
        auto T = logistic_statistic(X, yf, reg.active);
        bool member = reg.event.contains(T.value, reorder_active_first(of, reg.active, reg.inactive), 0.0);
        bool oracle = solve_randomized_logistic_lasso(X, yf, w, of).same_selection(fit);
        agree += member == oracle;
        inside += member;
    }
    CHECK(agree >= 0.95 * draws);
    CHECK(inside > 10);
    CHECK(inside < draws - 10);
}

TEST_CASE("split selection") {
    Matrix X = gaussian_design(40, 6, 23);
    Rng rng(24);
    Vector beta = Vector::Zero(6);
    beta(0) = 2.0;
    Vector y = X * beta + standard_normal_vector(rng, 40);
    double lam = 8.0;
    IndexSet all(40);
    std::iota(all.begin(), all.end(), 0);
    auto full = split_select(X, y, all, lam);
    auto direct = solve_lasso(X, y, lam);
    CHECK(full.fit.same_selection(direct));
    auto region = lasso_affine_region(X, direct.active, direct.signs, lam);
    CHECK((full.event.A - region.A).cwiseAbs().maxCoeff() < 1e-12);

    IndexSet half(all.begin(), all.begin() + 25);
    auto part = split_select(X, y, half, lam);
    for (int t = 0; t < 300; ++t) {
        Vector r = y + standard_normal_vector(rng, 40);
        bool oracle = solve_lasso(select_rows(X, half), select_rows(r, half), lam).same_selection(part.fit);
        CHECK(part.event.contains(r) == oracle);
    }
}

TEST_CASE("disjoint splits select independently") {
    Matrix X = gaussian_design(60, 4, 25);
    IndexSet first, second;
    for (Index i = 0; i < 60; ++i) (i < 30 ? first : second).push_back(i);
    const int reps = 2000;
    std::vector<double> a(reps), b(reps);
    for (int t = 0; t < reps; ++t) {
        Rng rng(derive_seed(26, t));
        Vector y = standard_normal_vector(rng, 60);
        a[t] = split_select(X, y, first, 8.0).fit.active.empty() ? 0.0 : 1.0;
        b[t] = split_select(X, y, second, 8.0).fit.active.empty() ? 0.0 : 1.0;
    }
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / reps;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / reps;
    REQUIRE(ma > 0.1);
    REQUIRE(ma < 0.9);
    double cov = 0.0;
    for (int t = 0; t < reps; ++t) cov += (a[t] - ma) * (b[t] - mb);
    cov /= reps - 1;
    double corr = cov / std::sqrt(ma * (1 - ma) * mb * (1 - mb));
    CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(reps)));
}
