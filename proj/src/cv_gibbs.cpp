#include "selectrand/cv_gibbs.hpp"
#include "selectrand/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace selectrand {

void CascadeVariances::validate() const {
    for (double v : {sigma1_sq, sigma2_cv_sq, sigma2_select_sq, sigma_sq})
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("cascade variances must be positive and finite");
}

RandomizationCascade randomize_cascade(const Vector& y, const CascadeVariances& variances, std::uint64_t seed) {
    variances.validate();
    if (y.size() < 1) throw InvalidInput("randomize_cascade: empty response");
    Rng rng(seed);
    Index n = y.size();
    RandomizationCascade c;
    c.y = y;
    c.variances = variances;
    c.y_inter = y + std::sqrt(variances.sigma1_sq) * standard_normal_vector(rng, n);
    c.y_cv = c.y_inter + std::sqrt(variances.sigma2_cv_sq) * standard_normal_vector(rng, n);
    c.y_select = c.y_inter + std::sqrt(variances.sigma2_select_sq) * standard_normal_vector(rng, n);
    return c;
}

Matrix normalize_columns(const Matrix& X) {
    Matrix out = X;
    double target = std::sqrt(static_cast<double>(X.rows()));
    for (Index j = 0; j < X.cols(); ++j) {
        double nrm = X.col(j).norm();
        if (!(nrm > 0.0)) throw InvalidInput("normalize_columns: zero column");
        out.col(j) *= target / nrm;
    }
    return out;
}

Vector default_cv_grid(Index p, int points) {
    if (p < 1 || points < 1) throw InvalidInput("default_cv_grid: need p >= 1 and at least one point");
    double base = std::sqrt(2.0 * std::log(std::max<double>(2.0, static_cast<double>(p))));
    Vector grid(points);
    for (int k = 0; k < points; ++k) {
        double frac = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
        grid(k) = base * 4.0 * std::pow(0.05, frac);
    }
    return grid;
}

int CVSelection::fold_count() const {
    return folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end()) + 1;
}

std::vector<int> draw_folds(Index n, int K, std::uint64_t fold_seed) {
    if (K < 2) throw InvalidInput("cross-validation needs K >= 2");
    if (n < K) throw InvalidInput("cross-validation needs at least K observations");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(fold_seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> folds(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < order.size(); ++k) folds[static_cast<std::size_t>(order[k])] = static_cast<int>(k % K);
    return folds;
}

namespace {

// Held-out squared error for every grid value; folds fixed.
Vector cv_scores(const Vector& y, const Matrix& X, const Vector& grid, const std::vector<int>& folds, int K) {
    Index n = X.rows();
    // Fit from the largest penalty down so each fit warm-starts the next.
    std::vector<Index> order(static_cast<std::size_t>(grid.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return grid(a) > grid(b); });
    Vector scores = Vector::Zero(grid.size());
    for (int k = 0; k < K; ++k) {
        IndexSet train, test;
        for (Index i = 0; i < n; ++i) (folds[static_cast<std::size_t>(i)] == k ? test : train).push_back(i);
        Matrix Xtr = select_rows(X, train);
        Vector ytr = select_rows(y, train);
        Matrix Xte = select_rows(X, test);
        Vector yte = select_rows(y, test);
        Vector warm;
        for (Index g : order) {
            try {
                LassoFit fit = solve_sqrt_lasso(Xtr, ytr, grid(g), warm);
                warm = fit.beta;
                scores(g) += (yte - Xte * fit.beta).squaredNorm();
            } catch (const Error& e) {
                throw CrossValidationError(std::string("cross-validation fold ") + std::to_string(k) +
                                               ", penalty " + std::to_string(g) + ": " + e.what(),
                                           k, g);
            }
        }
    }
    return scores;
}

Index argmin_prefer_larger(const Vector& scores, const Vector& grid) {
    Index best = 0;
    for (Index g = 1; g < grid.size(); ++g) {
        double s = scores(g), b = scores(best);
        if (s < b * (1.0 - 1e-12) || (std::abs(s - b) <= 1e-12 * b && grid(g) > grid(best))) best = g;
    }
    return best;
}

void validate_grid(const Vector& grid) {
    if (grid.size() < 1) throw InvalidInput("cross-validation grid is empty");
    for (Index g = 0; g < grid.size(); ++g)
        if (!(grid(g) > 0.0) || !std::isfinite(grid(g))) throw InvalidInput("grid penalties must be positive");
}

Index cv_lambda_index(const Vector& y, const Matrix& X, const Vector& grid, const std::vector<int>& folds, int K) {
    if (grid.size() == 1) return 0;
    return argmin_prefer_larger(cv_scores(y, X, grid, folds, K), grid);
}

} // namespace

CVSelection cv_select(const Vector& y_cv, const Matrix& X, const Vector& grid, int K, std::uint64_t fold_seed) {
    validate_grid(grid);
    if (y_cv.size() != X.rows()) throw InvalidInput("cv_select: response has the wrong length");
    CVSelection sel;
    sel.grid = grid;
    sel.folds = draw_folds(X.rows(), K, fold_seed);
    if (grid.size() == 1) {
        sel.cv_scores = Vector::Zero(1);
        sel.lambda_index = 0;
    } else {
        sel.cv_scores = cv_scores(y_cv, X, grid, sel.folds, K);
        sel.lambda_index = argmin_prefer_larger(sel.cv_scores, grid);
    }
    sel.lambda_hat = grid(sel.lambda_index);
    return sel;
}

void fit_selection(CVSelection& selection, const Matrix& X, const Vector& y_select) {
    LassoFit fit = solve_sqrt_lasso(X, y_select, selection.lambda_hat);
    selection.active = fit.active;
    selection.signs = fit.signs;
}

bool sqrt_lasso_selects(const Matrix& X, const Vector& y, double lam, const IndexSet& active, const Vector& signs) {
    Index p = X.cols();
    if (static_cast<Index>(active.size()) != signs.size()) throw InvalidInput("sqrt_lasso_selects: one sign per index");
    Vector r;
    Vector beta_E;
    if (active.empty()) {
        r = y;
    } else {
        Matrix XE = select_cols(X, active);
        Eigen::LDLT<Matrix> G(XE.transpose() * XE);
        Vector v = G.solve(signs);
        double q = signs.dot(v);
        if (!(lam * lam * q < 1.0)) return false;
        Vector b_ols = G.solve(XE.transpose() * y);
        double r_ols = (y - XE * b_ols).norm();
        // X_E'r = lam |r| z with |r|^2 = |r_ols|^2 + c^2 q, c = lam |r|.
        double c = lam * r_ols / std::sqrt(1.0 - lam * lam * q);
        beta_E = b_ols - c * v;
        for (Index a = 0; a < beta_E.size(); ++a)
            if (!(beta_E(a) * signs(a) > 0.0)) return false;
        r = y - XE * beta_E;
    }
    double nr = r.norm();
    if (!(nr > 0.0)) return false;
    std::vector<bool> in(static_cast<std::size_t>(p), false);
    for (Index j : active) in[static_cast<std::size_t>(j)] = true;
    Vector corr = X.transpose() * r;
    for (Index j = 0; j < p; ++j)
        if (!in[static_cast<std::size_t>(j)] && !(std::abs(corr(j)) < lam * nr)) return false;
    return true;
}

Vector sample_y_inter(const RandomizationCascade& s, Rng& rng) {
    const auto& v = s.variances;
    double w0 = 1.0 / v.sigma1_sq, w1 = 1.0 / v.sigma2_cv_sq, w2 = 1.0 / v.sigma2_select_sq;
    double prec = w0 + w1 + w2;
    Vector mean = (w0 * s.y + w1 * s.y_cv + w2 * s.y_select) / prec;
    return mean + standard_normal_vector(rng, s.y.size()) / std::sqrt(prec);
}

double GibbsResult::pvalue(Alternative alternative) const { return mc_pvalue(samples, observed, alternative); }

GibbsResult gibbs_chain(const RandomizationCascade& cascade, const Matrix& X, const CVSelection& selection,
                        Index target_j, const ChainConfig& config, const GibbsOptions& options) {
    config.validate();
    cascade.variances.validate();
    Index n = X.rows();
    if (cascade.y.size() != n || cascade.y_inter.size() != n || cascade.y_cv.size() != n ||
        cascade.y_select.size() != n)
        throw InvalidInput("gibbs_chain: cascade vectors have the wrong length");
    if (options.cv_every < 1 || options.cv_max_attempts < 1) throw InvalidInput("gibbs_chain: bad y_cv schedule");
    const IndexSet& E = selection.active;
    auto pos = std::find(E.begin(), E.end(), target_j);
    if (pos == E.end()) throw InvalidInput("gibbs_chain: target must be a selected variable");
    int K = selection.fold_count();
    double lam = selection.lambda_hat;

    RandomizationCascade s = cascade;
    if (selection.grid.size() > 1 && cv_lambda_index(s.y_cv, X, selection.grid, selection.folds, K) !=
                                         selection.lambda_index)
        throw SelectionViolated("gibbs_chain: y_cv does not reproduce the selected penalty");
    if (options.condition_on_model && !sqrt_lasso_selects(X, s.y_select, lam, E, selection.signs))
        throw SelectionViolated("gibbs_chain: y_select does not reproduce the selected model");

    // Orthonormal basis of span(X_{E\j}).
    IndexSet nuisance;
    for (Index j : E)
        if (j != target_j) nuisance.push_back(j);
    Matrix Qn(n, 0);
    if (!nuisance.empty()) {
        Matrix XN = select_cols(X, nuisance);
        Eigen::HouseholderQR<Matrix> qr(XN);
        Qn = qr.householderQ() * Matrix::Identity(n, XN.cols());
    }
    auto project = [&](const Vector& v) -> Vector {
        if (Qn.cols() == 0) return Vector::Zero(v.size());
        return Qn * (Qn.transpose() * v);
    };

    const auto& var = s.variances;
    double sd_cv = std::sqrt(var.sigma2_cv_sq);
    double sd_sel = std::sqrt(var.sigma2_select_sq);
    double shrink = var.sigma_sq / (var.sigma_sq + var.sigma1_sq);
    double post_sd = std::sqrt(var.sigma_sq * var.sigma1_sq / (var.sigma_sq + var.sigma1_sq));
    Vector Xj = X.col(target_j);

    GibbsResult out;
    out.observed = Xj.dot(cascade.y);
    int stride = std::max(config.thin, 1);
    long total = static_cast<long>(config.burn_in) + static_cast<long>(config.draws) * stride;
    out.samples.resize(config.draws);
    Rng rng(config.seed);
    int kept = 0;

    for (long sweep = 0; sweep < total; ++sweep) {
        ++out.sweeps;
        // y_cv: rejection against the penalty chosen with a fresh partition.
        if (sweep % options.cv_every == 0) {
            bool accepted = false;
            for (int attempt = 0; attempt < options.cv_max_attempts; ++attempt) {
                ++out.cv_attempts;
                Vector prop = s.y_inter + sd_cv * standard_normal_vector(rng, n);
                if (selection.grid.size() > 1) {
                    auto folds = draw_folds(n, K, rng());
                    if (cv_lambda_index(prop, X, selection.grid, folds, K) != selection.lambda_index) continue;
                }
                s.y_cv = prop;
                accepted = true;
                ++out.cv_updates;
                break;
            }
            if (!accepted) ++out.cv_skipped;
        }

        // y_select: elliptical slice move for N(y_inter, sd_sel^2 I) on the region.
        if (options.condition_on_model) {
            Vector centered = s.y_select - s.y_inter;
            Vector nu = sd_sel * standard_normal_vector(rng, n);
            double theta = 2.0 * std::numbers::pi * uniform_open(rng);
            double lo = theta - 2.0 * std::numbers::pi, hi = theta;
            for (int it = 0; it < 200; ++it) {
                Vector prop = s.y_inter + centered * std::cos(theta) + nu * std::sin(theta);
                if (sqrt_lasso_selects(X, prop, lam, E, selection.signs)) {
                    s.y_select = prop;
                    break;
                }
                ++out.select_shrinks;
                if (theta < 0.0) lo = theta;
                else hi = theta;
                theta = lo + (hi - lo) * uniform_open(rng);
            }
        } else {
            s.y_select = s.y_inter + sd_sel * standard_normal_vector(rng, n);
        }

        s.y_inter = sample_y_inter(s, rng);

        // y: refreshed only off span(X_{E\j}).
        Vector fixed = project(s.y);
        Vector draw = shrink * s.y_inter + post_sd * standard_normal_vector(rng, n);
        Vector next = fixed + draw - project(draw);
        if ((project(next) - fixed).norm() > 1e-9 * (1.0 + fixed.norm()))
            throw InvariantViolation("gibbs_chain: y update moved P_{E\\j} y");
        s.y = next;

        if (sweep >= config.burn_in && (sweep - config.burn_in + 1) % stride == 0 && kept < config.draws)
            out.samples(kept++) = Xj.dot(s.y);
    }
    return out;
}

CvPipelineResult cv_null_pvalue(const CvPipelineSetup& setup, std::uint64_t seed) {
    if (setup.n < 2 * setup.options.folds || setup.p < 2) throw InvalidInput("cv pipeline: problem too small");
    Vector beta = setup.beta;
    if (beta.size() == 0) {
        beta = Vector::Zero(setup.p);
        beta.head(2).setConstant(1.0);
    }
    if (beta.size() != setup.p) throw InvalidInput("cv pipeline: beta has the wrong length");
    Vector grid = setup.grid.size() > 0 ? setup.grid : default_cv_grid(setup.p, setup.grid_points);
    double sigma = std::sqrt(setup.variances.sigma_sq);

    CvPipelineResult out;
    for (int d = 0; d < setup.max_datasets; ++d) {
        ++out.datasets;
        std::uint64_t ds = derive_seed(seed, static_cast<std::uint64_t>(d));
        Rng rng(ds);
        Matrix X(setup.n, setup.p);
        for (Index j = 0; j < setup.p; ++j)
            for (Index i = 0; i < setup.n; ++i) X(i, j) = standard_normal(rng);
        X = normalize_columns(X);
        Vector y = X * beta + sigma * standard_normal_vector(rng, setup.n);
        auto cascade = randomize_cascade(y, setup.variances, derive_seed(ds, 1));
        auto sel = cv_select(cascade.y_cv, X, grid, setup.options.folds, derive_seed(ds, 2));
        fit_selection(sel, X, cascade.y_select);
        bool covers = true;
        Index target = -1;
        for (Index j = 0; j < setup.p; ++j) {
            bool in = std::find(sel.active.begin(), sel.active.end(), j) != sel.active.end();
            if (beta(j) != 0.0 && !in) covers = false;
            if (beta(j) == 0.0 && in && target < 0) target = j;
        }
        if (!covers || target < 0) continue;
        ChainConfig cfg = setup.chain;
        cfg.seed = derive_seed(ds, 3);
        out.chain = gibbs_chain(cascade, X, sel, target, cfg, setup.options);
        out.pvalue = out.chain.pvalue(Alternative::two_sided);
        out.target = target;
        out.lambda_hat = sel.lambda_hat;
        out.active = sel.active;
        return out;
    }
    throw InsufficientSamples("cv pipeline: no dataset selected a model with a null variable");
}

} // namespace selectrand
