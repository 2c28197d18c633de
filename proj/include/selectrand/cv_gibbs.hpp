#pragma once

#include "selectrand/common.hpp"
#include "selectrand/sampler.hpp"

#include <cstdint>
#include <vector>

namespace selectrand {

struct CascadeVariances {
    double sigma1_sq = 0.5;         // y_inter | y
    double sigma2_cv_sq = 0.5;      // y_cv | y_inter
    double sigma2_select_sq = 0.5;  // y_select | y_inter
    double sigma_sq = 1.0;          // model noise variance, taken as known

    void validate() const;
};

/// y_inter | y ~ N(y, s1 I); y_cv, y_select | y_inter independent
/// N(y_inter, s2 I) with their own variances.
struct RandomizationCascade {
    Vector y;
    Vector y_inter;
    Vector y_cv;
    Vector y_select;
    CascadeVariances variances;
};

RandomizationCascade randomize_cascade(const Vector& y, const CascadeVariances& variances, std::uint64_t seed);

/// Columns rescaled to Euclidean norm sqrt(n).
Matrix normalize_columns(const Matrix& X);

/// Geometric grid, largest first, from 4 sqrt(2 log p) down to 0.2 sqrt(2 log p):
/// brackets the square-root lasso null threshold for columns of norm sqrt(n).
Vector default_cv_grid(Index p, int points = 20);

struct CVSelection {
    double lambda_hat = 0.0;
    Index lambda_index = 0;
    Vector grid;
    std::vector<int> folds;  // fold label in [0, K) per observation
    Vector cv_scores;        // held-out squared error per grid value
    IndexSet active;
    Vector signs;

    int fold_count() const;
};

/// Solver failure inside cross-validation, tagged with where it happened.
class CrossValidationError : public Error {
public:
    CrossValidationError(const std::string& what, int fold, Index lambda_index)
        : Error(what), fold_(fold), lambda_index_(lambda_index) {}
    int fold() const noexcept { return fold_; }
    Index lambda_index() const noexcept { return lambda_index_; }

private:
    int fold_;
    Index lambda_index_;
};

/// Random partition of n observations into K groups of near-equal size.
std::vector<int> draw_folds(Index n, int K, std::uint64_t fold_seed);

/// K-fold cross-validated square-root lasso over the grid; held-out squared
/// error; ties go to the larger penalty. The partition comes from fold_seed.
CVSelection cv_select(const Vector& y_cv, const Matrix& X, const Vector& grid, int K, std::uint64_t fold_seed);

/// Fills active and signs from the square-root lasso fit to y_select at lambda_hat.
void fit_selection(CVSelection& selection, const Matrix& X, const Vector& y_select);

/// True when the square-root lasso at lam selects exactly (active, signs) for y.
/// Solves the sign-restricted problem in closed form and checks the KKT
/// conditions, which characterize the unique solution.
bool sqrt_lasso_selects(const Matrix& X, const Vector& y, double lam, const IndexSet& active, const Vector& signs);

struct GibbsOptions {
    int cv_every = 10;          // y_cv refreshed every cv_every sweeps
    int cv_max_attempts = 500;  // rejection cap per refresh
    int folds = 5;
    bool condition_on_model = true;  // false drops the (E, z_E) event
};

struct GibbsResult {
    Vector samples;  // X_j'y after each kept sweep
    double observed = 0.0;
    std::size_t sweeps = 0;
    std::size_t cv_updates = 0;
    std::size_t cv_skipped = 0;
    std::size_t cv_attempts = 0;
    std::size_t select_shrinks = 0;

    double cv_acceptance_rate() const {
        return cv_attempts == 0 ? 0.0 : static_cast<double>(cv_updates) / static_cast<double>(cv_attempts);
    }
    double pvalue(Alternative alternative = Alternative::two_sided) const;
};

/// y_inter | y, y_cv, y_select: precision-weighted gaussian.
Vector sample_y_inter(const RandomizationCascade& state, Rng& rng);

/// Gibbs sampler for X_j'y given lambda_hat, (E, z_E) and P_{E\j} y under
/// beta_j = 0 in the selected model. Each sweep: y_cv (every cv_every
/// sweeps, rejection), y_select (elliptical slice moves inside the selection
/// region), y_inter, then y in the complement of span(X_{E\j}).
/// burn_in sweeps are dropped and every thin-th sweep is kept.
GibbsResult gibbs_chain(const RandomizationCascade& cascade, const Matrix& X, const CVSelection& selection,
                        Index target_j, const ChainConfig& config, const GibbsOptions& options = {});

/// One end-to-end replication: gaussian design with columns of norm sqrt(n),
/// y = X beta + sigma eps, cascade, cross-validated penalty, square-root lasso
/// selection, then the Gibbs p-value for the first selected variable whose
/// true coefficient is zero. Data are redrawn until the selected model
/// contains the true support and at least one null variable.
struct CvPipelineSetup {
    int n = 100;
    int p = 10;
    Vector beta;  // empty: 1.0 on the first two coordinates, zero elsewhere
    CascadeVariances variances;
    int grid_points = 20;
    Vector grid;  // empty: default_cv_grid(p, grid_points)
    ChainConfig chain{200, 1, 1000, 0};
    GibbsOptions options;
    int max_datasets = 1000;
};

struct CvPipelineResult {
    double pvalue = 1.0;
    Index target = -1;
    double lambda_hat = 0.0;
    IndexSet active;
    std::size_t datasets = 0;  // datasets drawn until one qualified
    GibbsResult chain;
};

CvPipelineResult cv_null_pvalue(const CvPipelineSetup& setup, std::uint64_t seed);

} // namespace selectrand
