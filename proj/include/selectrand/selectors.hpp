#pragma once

#include "selectrand/common.hpp"
#include "selectrand/gaussian_core.hpp"

#include <optional>

namespace selectrand {

/// How the event constrains its arguments.
///   raw:        A x + B omega <= b
///   normalized: sqrt(n) A T + B omega <= b (A stored without the sqrt(n))
enum class EventScaling { raw, normalized };

struct AffineSelectionEvent {
    Matrix A;
    Matrix B;  // may have zero columns when there is no separate randomization
    Vector b;
    EventScaling scaling = EventScaling::raw;
    int n = 1;  // used by the normalized scaling

    Index rows() const { return b.size(); }
    /// A with the sqrt(n) factor applied, so the event is effective_A() x + B omega <= b.
    Matrix effective_A() const;
    /// b - effective_A() x - B omega.
    Vector slack(const Vector& x, const Vector& omega = Vector()) const;
    bool contains(const Vector& x, const Vector& omega = Vector(), double tol = 1e-9) const;
    void validate() const;
};

struct LassoFit {
    Vector beta;
    IndexSet active;
    Vector signs;             // s_E, one per active coordinate
    Vector subgrad_inactive;  // u_{-E}, one per inactive coordinate
    Vector lam;               // per-coordinate penalty weights
    double objective = 0.0;
    double gap = 0.0;         // duality gap / gradient-map norm at exit
    int iterations = 0;
    std::vector<double> trace;

    IndexSet inactive() const;
    /// True when active sets and signs agree.
    bool same_selection(const LassoFit& other) const;
};

struct LassoOptions {
    double gap_tol = 1e-9;     // relative to 1 + |objective|
    int max_sweeps = 100000;
    double active_tol = 1e-8;
    bool record_trace = false;  // keep the objective after every sweep
};

/// argmin 1/2 ||y - X beta||^2 + sum_j lam_j |beta_j| by cyclic coordinate descent.
LassoFit solve_lasso(const Matrix& X, const Vector& y, const Vector& lam, const LassoOptions& options = {},
                     const Vector& warm_start = Vector());
LassoFit solve_lasso(const Matrix& X, const Vector& y, double lam, const LassoOptions& options = {});

/// Region of responses r with solve_lasso(X, r, lam) selecting (active, signs).
/// Rows: the sign conditions of the active block, then the upper and lower
/// subgradient bounds of the inactive block. Expressed on r (n columns).
AffineSelectionEvent lasso_affine_region(const Matrix& X, const IndexSet& active, const Vector& signs,
                                         const Vector& lam);
AffineSelectionEvent lasso_affine_region(const Matrix& X, const IndexSet& active, const Vector& signs, double lam);

/// The same region expressed on U = X'r (p columns), built from the Gram matrix.
AffineSelectionEvent lasso_gram_region(const Matrix& gram, const IndexSet& active, const Vector& signs,
                                       const Vector& lam);

/// argmin ||y - X beta||_2 + lam ||beta||_1 by alternating scaled-lasso steps.
LassoFit solve_sqrt_lasso(const Matrix& X, const Vector& y, double lam, const Vector& warm_start = Vector());

/// Smallest lam giving the zero solution of the square-root lasso.
double sqrt_lasso_null_threshold(const Matrix& X, const Vector& y);

/// argmin l(beta)/sqrt(n) + omega'beta + ||Lambda beta||_1 + ||beta||^2 / (2 sqrt(n)),
/// l the logistic negative log-likelihood. Accelerated proximal gradient.
LassoFit solve_randomized_logistic_lasso(const Matrix& X, const Vector& y, const Vector& weights,
                                         const Vector& omega, const Vector& start = Vector(),
                                         double tol = 1e-8, int max_iter = 100000);

/// Relation X'(y - pi(X beta)) - sqrt(n)(omega + Lambda z) - beta with z the
/// subgradient implied by the fit; zero at an exact solution.
Vector logistic_kkt_residual(const Matrix& X, const Vector& y, const Vector& weights, const Vector& omega,
                             const LassoFit& fit);

/// Unpenalized logistic MLE on the given columns (Newton).
Vector logistic_restricted_mle(const Matrix& XE, const Vector& y);

struct LogisticRegionMatrices {
    Matrix Q;  // X_E' W X_E / n at beta_bar
    Matrix C;  // X_{-E}' W X_E / n
    Matrix D;  // C Q^{-1}
    Vector beta_bar;
    AffineSelectionEvent event;  // normalized: sqrt(n) A T + B omega <= b, omega ordered (E, -E)
    LinearizableStatistic T;     // (beta_bar, X_{-E}'(y - pi_E(beta_bar)) / n)
    IndexSet active;
    IndexSet inactive;
};

/// Statistic T for a fixed active set (used for fresh data in region checks).
LinearizableStatistic logistic_statistic(const Matrix& X, const Vector& y, const IndexSet& active,
                                         Vector* beta_bar_out = nullptr, Matrix* Q_out = nullptr,
                                         Matrix* C_out = nullptr);

LogisticRegionMatrices logistic_region(const Matrix& X, const Vector& y, const LassoFit& fit,
                                       const Vector& weights);

/// omega reordered as (omega_E, omega_{-E}) to match the region's B.
Vector reorder_active_first(const Vector& v, const IndexSet& active, const IndexSet& inactive);

struct SplitSelection {
    LassoFit fit;
    AffineSelectionEvent event;  // on the full response; columns outside rows are zero
    IndexSet rows;
};

SplitSelection split_select(const Matrix& X, const Vector& y, const IndexSet& rows, double lam);

Matrix select_rows(const Matrix& X, const IndexSet& rows);
Vector select_rows(const Vector& y, const IndexSet& rows);
Matrix select_cols(const Matrix& X, const IndexSet& cols);
IndexSet complement(const IndexSet& set, Index size);

} // namespace selectrand
