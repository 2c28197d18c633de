#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "selectrand/cv_gibbs.hpp"
#include "selectrand/numerics.hpp"
#include "selectrand/selectors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

using namespace selectrand;

namespace {

Matrix design(Index n, Index p, std::uint64_t seed) {
    Rng rng(seed);
    Matrix X(n, p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < n; ++i) X(i, j) = standard_normal(rng);
    return normalize_columns(X);
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

TEST_CASE("cascade with vanishing variances reproduces y") {
    Rng rng(1);
    Vector y = standard_normal_vector(rng, 50);
    CascadeVariances v{1e-12, 1e-12, 1e-12, 1.0};
    auto c = randomize_cascade(y, v, 7);
    CHECK((c.y_cv - y).cwiseAbs().maxCoeff() < 1e-5);
    CHECK((c.y_select - y).cwiseAbs().maxCoeff() < 1e-5);
    CHECK((c.y_inter - y).cwiseAbs().maxCoeff() < 1e-5);
    CHECK_THROWS_AS(randomize_cascade(y, CascadeVariances{0.0, 1.0, 1.0, 1.0}, 1), InvalidInput);
}

TEST_CASE("cascade marginal variances and conditional independence") {
    Index n = 10000;
    Vector y = Vector::Zero(n);
    CascadeVariances v{0.7, 0.4, 1.3, 1.0};
    auto c = randomize_cascade(y, v, 11);
    Vector dcv = c.y_cv - y;
    double var = dcv.squaredNorm() / n;
    CHECK(std::abs(var / (v.sigma1_sq + v.sigma2_cv_sq) - 1.0) < 0.05);
    Vector dsel = c.y_select - y;
    CHECK(std::abs(dsel.squaredNorm() / n / (v.sigma1_sq + v.sigma2_select_sq) - 1.0) < 0.05);
    Vector a = c.y_cv - c.y_inter, b = c.y_select - c.y_inter;
    Vector prod = a.cwiseProduct(b);
    auto ms = mean_and_se(to_std(prod));
    CHECK(std::abs(ms.mean) < 3.0 * ms.se);
}

TEST_CASE("folds partition the observations") {
    auto f = draw_folds(103, 5, 3);
    std::vector<int> counts(5, 0);
    for (int k : f) {
        REQUIRE(k >= 0);
        REQUIRE(k < 5);
        ++counts[k];
    }
    for (int c : counts) CHECK((c == 20 || c == 21));
    CHECK(draw_folds(103, 5, 3) == f);
    CHECK_THROWS_AS(draw_folds(10, 1, 0), InvalidInput);
}

TEST_CASE("cv_select conventions") {
    Matrix X = design(60, 6, 2);
    Rng rng(3);
    Vector y = standard_normal_vector(rng, 60);
    Vector one = Vector::Constant(1, 1.7);
    auto s1 = cv_select(y, X, one, 5, 4);
    CHECK(s1.lambda_hat == 1.7);

    // Every penalty above every fold's null threshold: all scores tie.
    Vector high(3);
    high << 50.0, 80.0, 65.0;
    auto tie = cv_select(y, X, high, 5, 4);
    CHECK(tie.cv_scores(0) == tie.cv_scores(1));
    CHECK(tie.lambda_hat == 80.0);

    CHECK_THROWS_AS(cv_select(y, X, Vector(), 5, 4), InvalidInput);
    CHECK_THROWS_AS(cv_select(y, X, high, 1, 4), InvalidInput);
    try {
        cv_select(Vector::Zero(60), X, default_cv_grid(6), 5, 4);
        FAIL("expected a cross-validation failure");
    } catch (const CrossValidationError& e) {
        CHECK(e.fold() == 0);
        CHECK(e.lambda_index() == 0);
    }
}

TEST_CASE("pure noise mostly selects the empty model") {
    int empty = 0, seeds = 50;
    Vector grid = default_cv_grid(10);
    for (int s = 0; s < seeds; ++s) {
        Matrix X = design(100, 10, 100 + s);
        Rng rng(200 + s);
        Vector y = standard_normal_vector(rng, 100);
        auto sel = cv_select(y, X, grid, 5, 300 + s);
        // Every empty fit ties, and ties go to the largest penalty.
        if (sel.lambda_index == 0) ++empty;
    }
    CAPTURE(empty);
    CHECK(empty >= seeds / 2);
}

TEST_CASE("closed-form membership agrees with the solver") {
    Matrix X = design(60, 8, 5);
    Vector beta = Vector::Zero(8);
    beta(0) = 0.4;
    beta(3) = -0.3;
    int agree = 0, total = 400;
    for (int r = 0; r < total; ++r) {
        Rng rng(1000 + r);
        Vector y = X * beta + standard_normal_vector(rng, 60);
        double lam = 1.0 + 0.5 * uniform_open(rng);
        auto fit = solve_sqrt_lasso(X, y, lam);
        bool self = sqrt_lasso_selects(X, y, lam, fit.active, fit.signs);
        // A different model must be rejected.
        IndexSet other = fit.active;
        Vector other_signs = fit.signs;
        if (!other.empty()) {
            other_signs(0) = -other_signs(0);
        } else {
            other.push_back(0);
            other_signs = Vector::Ones(1);
        }
        bool cross = sqrt_lasso_selects(X, y, lam, other, other_signs);
        if (self && !cross) ++agree;
    }
    CHECK(agree == total);
}

TEST_CASE("y_inter conditional matches the precision-weighted formula") {
    Index n = 5;
    RandomizationCascade s;
    s.variances = CascadeVariances{0.5, 0.8, 0.3, 1.0};
    s.y = Vector::LinSpaced(n, -1.0, 1.0);
    s.y_cv = Vector::Constant(n, 0.4);
    s.y_select = Vector::LinSpaced(n, 2.0, -2.0);
    double w0 = 2.0, w1 = 1.25, w2 = 1.0 / 0.3, prec = w0 + w1 + w2;
    Vector mean = (w0 * s.y + w1 * s.y_cv + w2 * s.y_select) / prec;
    Rng rng(9);
    int draws = 10000;
    Matrix all(draws, n);
    for (int d = 0; d < draws; ++d) all.row(d) = sample_y_inter(s, rng).transpose();
    for (Index i = 0; i < n; ++i) {
        auto ms = mean_and_se(to_std(all.col(i)));
        CHECK(std::abs(ms.mean - mean(i)) < 4.0 * ms.se);
        Vector dev = (all.col(i).array() - mean(i)).square().matrix();
        auto vs = mean_and_se(to_std(dev));
        CHECK(std::abs(vs.mean - 1.0 / prec) < 4.0 * vs.se);
    }
}

TEST_CASE("without selection the chain marginal is the unconditional gaussian") {
    Index n = 40, p = 4;
    Matrix X = design(n, p, 21);
    Rng rng(22);
    Vector y = X.col(1) * 0.3 + standard_normal_vector(rng, n);
    auto cascade = randomize_cascade(y, CascadeVariances{}, 23);
    auto sel = cv_select(cascade.y_cv, X, Vector::Constant(1, 0.5), 5, 24);
    fit_selection(sel, X, cascade.y_select);
    REQUIRE(sel.active.size() >= 2);
    Index j = sel.active[0];
    GibbsOptions opt;
    opt.condition_on_model = false;
    opt.cv_every = 1;  // a y_cv held for several sweeps makes thinned draws correlated
    ChainConfig cfg{200, 10, 5000, 25};
    auto res = gibbs_chain(cascade, X, sel, j, cfg, opt);

    IndexSet nuisance(sel.active.begin() + 1, sel.active.end());
    Matrix XN = select_cols(X, nuisance);
    Matrix P = XN * (XN.transpose() * XN).inverse() * XN.transpose();
    double mean = X.col(j).dot(P * y);
    double sd = std::sqrt(X.col(j).dot(X.col(j) - P * X.col(j)));
    auto xs = to_std(res.samples);
    double ks = ks_statistic(xs, [&](double t) { return normal_cdf((t - mean) / sd); });
    CHECK(ks < ks_critical_95(xs.size()));
    CHECK(res.cv_skipped == 0);
}

TEST_CASE("gibbs chain keeps its conditioning events") {
    CvPipelineSetup setup;
    setup.chain = ChainConfig{20, 1, 100, 0};
    auto r = cv_null_pvalue(setup, 77);
    REQUIRE(r.target >= 0);
    CHECK(r.chain.samples.size() == 100);
    CHECK(r.pvalue > 0.0);
    CHECK(r.pvalue <= 1.0);
    auto again = cv_null_pvalue(setup, 77);
    CHECK(again.pvalue == r.pvalue);
    CHECK((again.chain.samples - r.chain.samples).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.chain.cv_updates + r.chain.cv_skipped == 12);
}

TEST_CASE("gibbs chain rejects inconsistent inputs") {
    Index n = 40, p = 4;
    Matrix X = design(n, p, 31);
    Rng rng(32);
    Vector y = X.col(0) + standard_normal_vector(rng, n);
    auto cascade = randomize_cascade(y, CascadeVariances{}, 33);
    auto sel = cv_select(cascade.y_cv, X, Vector::Constant(1, 0.8), 5, 34);
    fit_selection(sel, X, cascade.y_select);
    REQUIRE(!sel.active.empty());
    IndexSet inactive = complement(sel.active, p);
    REQUIRE(!inactive.empty());
    ChainConfig cfg{0, 1, 10, 1};
    CHECK_THROWS_AS(gibbs_chain(cascade, X, sel, inactive[0], cfg), InvalidInput);
    CVSelection wrong = sel;
    wrong.signs = -wrong.signs;
    CHECK_THROWS_AS(gibbs_chain(cascade, X, wrong, sel.active[0], cfg), SelectionViolated);
}

TEST_CASE("end-to-end null p-values are uniform") {
    const int reps = 100;
    std::vector<double> pv(reps);
    auto t0 = std::chrono::steady_clock::now();
    parallel_for(reps, [&](std::size_t r) {
        CvPipelineSetup setup;
        setup.chain = ChainConfig{100, 1, 500, 0};
        pv[r] = cv_null_pvalue(setup, derive_seed(4242, r)).pvalue;
    });
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    MESSAGE("seconds per replication: " << secs / reps);
    double ks = ks_uniform_statistic(pv);
    CAPTURE(ks);
    CHECK(ks < ks_critical_95(pv.size()));
}
