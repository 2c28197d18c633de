#include "selectrand/selectors.hpp"

#include <algorithm>
#include <cmath>

namespace selectrand {

// ---------------------------------------------------------------------------
// Small helpers.
// ---------------------------------------------------------------------------

Matrix select_rows(const Matrix& X, const IndexSet& rows) {
    Matrix out(static_cast<Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = X.row(rows[i]);
    return out;
}

Vector select_rows(const Vector& y, const IndexSet& rows) {
    Vector out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = y(rows[i]);
    return out;
}

Matrix select_cols(const Matrix& X, const IndexSet& cols) {
    Matrix out(X.rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = X.col(cols[j]);
    return out;
}

IndexSet complement(const IndexSet& set, Index size) {
    std::vector<bool> in(static_cast<std::size_t>(size), false);
    for (Index j : set) in[static_cast<std::size_t>(j)] = true;
    IndexSet out;
    for (Index j = 0; j < size; ++j)
        if (!in[static_cast<std::size_t>(j)]) out.push_back(j);
    return out;
}

Vector reorder_active_first(const Vector& v, const IndexSet& active, const IndexSet& inactive) {
    Vector out(v.size());
    Index k = 0;
    for (Index j : active) out(k++) = v(j);
    for (Index j : inactive) out(k++) = v(j);
    return out;
}

namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

void fill_selection(LassoFit& fit, double active_tol) {
    fit.active.clear();
    std::vector<double> s;
    for (Index j = 0; j < fit.beta.size(); ++j) {
        if (std::abs(fit.beta(j)) > active_tol) {
            fit.active.push_back(j);
            s.push_back(fit.beta(j) > 0.0 ? 1.0 : -1.0);
        }
    }
    fit.signs = Eigen::Map<Vector>(s.data(), static_cast<Index>(s.size()));
}

Vector expand_lam(double lam, Index p) {
    if (!(lam > 0.0) || !std::isfinite(lam)) throw InvalidInput("penalty must be positive and finite");
    return Vector::Constant(p, lam);
}

} // namespace

IndexSet LassoFit::inactive() const { return complement(active, beta.size()); }

bool LassoFit::same_selection(const LassoFit& other) const {
    if (active != other.active) return false;
    return (signs - other.signs).cwiseAbs().sum() == 0.0;
}

// ---------------------------------------------------------------------------
// Affine events.
// ---------------------------------------------------------------------------

void AffineSelectionEvent::validate() const {
    if (b.size() < 1) throw InvalidInput("affine event needs at least one row");
    if (A.rows() != b.size()) throw InvalidInput("affine event: A and b disagree on rows");
    if (B.cols() > 0 && B.rows() != b.size()) throw InvalidInput("affine event: B and b disagree on rows");
}

Matrix AffineSelectionEvent::effective_A() const {
    if (scaling == EventScaling::normalized) return std::sqrt(static_cast<double>(n)) * A;
    return A;
}

Vector AffineSelectionEvent::slack(const Vector& x, const Vector& omega) const {
    if (x.size() != A.cols()) throw InvalidInput("affine event: argument has the wrong dimension");
    Vector s = b - effective_A() * x;
    if (B.cols() > 0) {
        if (omega.size() != B.cols()) throw InvalidInput("affine event: randomization has the wrong dimension");
        s -= B * omega;
    }
    return s;
}

bool AffineSelectionEvent::contains(const Vector& x, const Vector& omega, double tol) const {
    Vector s = slack(x, omega);
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) < -tol * (1.0 + std::abs(b(i)))) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Lasso by coordinate descent.
// ---------------------------------------------------------------------------

LassoFit solve_lasso(const Matrix& X, const Vector& y, const Vector& lam, const LassoOptions& options,
                     const Vector& warm_start) {
    Index n = X.rows();
    Index p = X.cols();
    if (y.size() != n) throw InvalidInput("solve_lasso: y has the wrong length");
    if (lam.size() != p) throw InvalidInput("solve_lasso: penalty weights have the wrong length");
    for (Index j = 0; j < p; ++j)
        if (!(lam(j) > 0.0) || !std::isfinite(lam(j))) throw InvalidInput("solve_lasso: penalties must be positive");
    Vector col_sq = X.colwise().squaredNorm().transpose();
    for (Index j = 0; j < p; ++j)
        if (!(col_sq(j) > 0.0)) throw InvalidInput("solve_lasso: design has a zero column");

    LassoFit fit;
    fit.lam = lam;
    fit.beta = warm_start.size() == p ? warm_start : Vector::Zero(p);
    Vector r = y - X * fit.beta;

    auto primal = [&]() { return 0.5 * r.squaredNorm() + lam.dot(fit.beta.cwiseAbs()); };
    auto duality_gap = [&](double P) {
        Vector c = X.transpose() * r;
        double s = 1.0;
        for (Index j = 0; j < p; ++j)
            if (std::abs(c(j)) > lam(j)) s = std::min(s, lam(j) / std::abs(c(j)));
        // theta = s r; D = y'theta - |theta|^2 / 2
        double D = s * y.dot(r) - 0.5 * s * s * r.squaredNorm();
        return std::max(0.0, P - D);
    };

    double P = primal();
    double gap = duality_gap(P);
    if (options.record_trace) fit.trace.push_back(P);
    int sweep = 0;
    while (gap > options.gap_tol * (1.0 + std::abs(P)) && sweep < options.max_sweeps) {
        ++sweep;
        for (Index j = 0; j < p; ++j) {
            double old = fit.beta(j);
            double z = X.col(j).dot(r) + col_sq(j) * old;
            double nb = soft_threshold(z, lam(j)) / col_sq(j);
            if (nb != old) {
                r.noalias() -= X.col(j) * (nb - old);
                fit.beta(j) = nb;
            }
        }
        // Guard against drift in the running residual.
        if (sweep % 200 == 0) r = y - X * fit.beta;
        P = primal();
        gap = duality_gap(P);
        if (options.record_trace) fit.trace.push_back(P);
    }
    fit.iterations = sweep;
    fit.objective = P;
    fit.gap = gap;
    if (gap > options.gap_tol * (1.0 + std::abs(P)))
        throw NonConvergence("solve_lasso: duality gap did not converge", gap);

    fill_selection(fit, options.active_tol);
    IndexSet inact = fit.inactive();
    Vector c = X.transpose() * r;
    fit.subgrad_inactive.resize(static_cast<Index>(inact.size()));
    for (std::size_t k = 0; k < inact.size(); ++k)
        fit.subgrad_inactive(static_cast<Index>(k)) = c(inact[k]) / lam(inact[k]);
    return fit;
}

LassoFit solve_lasso(const Matrix& X, const Vector& y, double lam, const LassoOptions& options) {
    return solve_lasso(X, y, expand_lam(lam, X.cols()), options);
}

AffineSelectionEvent lasso_gram_region(const Matrix& gram, const IndexSet& active, const Vector& signs,
                                       const Vector& lam) {
    Index p = gram.rows();
    if (gram.cols() != p) throw InvalidInput("lasso region: Gram matrix must be square");
    if (lam.size() != p) throw InvalidInput("lasso region: penalty weights have the wrong length");
    auto k = static_cast<Index>(active.size());
    if (signs.size() != k) throw InvalidInput("lasso region: one sign per active coordinate");
    IndexSet inact = complement(active, p);
    auto m = static_cast<Index>(inact.size());

    AffineSelectionEvent ev;
    ev.A = Matrix::Zero(k + 2 * m, p);
    ev.b = Vector::Zero(k + 2 * m);
    ev.scaling = EventScaling::raw;

    Matrix M = Matrix::Zero(m, k);  // G_{-E,E} G_EE^{-1}
    Vector lam_s = Vector::Zero(k);
    if (k > 0) {
        Matrix GEE(k, k);
        for (Index a = 0; a < k; ++a)
            for (Index c = 0; c < k; ++c) GEE(a, c) = gram(active[a], active[c]);
        Eigen::ColPivHouseholderQR<Matrix> qr(GEE);
        qr.setThreshold(1e-10);
        if (qr.rank() < k) throw RankError("lasso region: active columns are not of full rank");
        Matrix GEE_inv = qr.inverse();
        for (Index a = 0; a < k; ++a) lam_s(a) = lam(active[a]) * signs(a);
        Vector beta_offset = GEE_inv * lam_s;
        for (Index a = 0; a < k; ++a) {
            for (Index c = 0; c < k; ++c) ev.A(a, active[c]) = -signs(a) * GEE_inv(a, c);
            ev.b(a) = -signs(a) * beta_offset(a);
        }
        Matrix GNE(m, k);
        for (Index a = 0; a < m; ++a)
            for (Index c = 0; c < k; ++c) GNE(a, c) = gram(inact[a], active[c]);
        M = GNE * GEE_inv;
    }
    Vector shift = M * lam_s;
    for (Index a = 0; a < m; ++a) {
        Index up = k + a;
        Index lo = k + m + a;
        ev.A(up, inact[a]) = 1.0;
        ev.A(lo, inact[a]) = -1.0;
        for (Index c = 0; c < k; ++c) {
            ev.A(up, active[c]) = -M(a, c);
            ev.A(lo, active[c]) = M(a, c);
        }
        ev.b(up) = lam(inact[a]) - shift(a);
        ev.b(lo) = lam(inact[a]) + shift(a);
    }
    return ev;
}

AffineSelectionEvent lasso_affine_region(const Matrix& X, const IndexSet& active, const Vector& signs,
                                         const Vector& lam) {
    AffineSelectionEvent on_u = lasso_gram_region(X.transpose() * X, active, signs, lam);
    AffineSelectionEvent ev;
    ev.A = on_u.A * X.transpose();
    ev.b = on_u.b;
    ev.scaling = EventScaling::raw;
    return ev;
}

AffineSelectionEvent lasso_affine_region(const Matrix& X, const IndexSet& active, const Vector& signs, double lam) {
    return lasso_affine_region(X, active, signs, expand_lam(lam, X.cols()));
}

// ---------------------------------------------------------------------------
// Square-root lasso.
// ---------------------------------------------------------------------------

double sqrt_lasso_null_threshold(const Matrix& X, const Vector& y) {
    double ny = y.norm();
    if (!(ny > 0.0)) throw DegenerateFit("square-root lasso: response is zero");
    return (X.transpose() * y).cwiseAbs().maxCoeff() / ny;
}

LassoFit solve_sqrt_lasso(const Matrix& X, const Vector& y, double lam, const Vector& warm_start) {
    if (!(lam > 0.0) || !std::isfinite(lam)) throw InvalidInput("solve_sqrt_lasso: penalty must be positive");
    Index p = X.cols();
    double ny = y.norm();
    if (!(ny > 0.0)) throw DegenerateFit("square-root lasso: response is zero");
    LassoOptions inner;
    inner.gap_tol = 1e-13;

    Vector beta = warm_start.size() == p ? warm_start : Vector::Zero(p);
    LassoFit fit;
    int it = 0;
    for (; it < 2000; ++it) {
        double sigma = (y - X * beta).norm();
        if (!(sigma > 1e-12 * ny)) throw DegenerateFit("square-root lasso: residual vanished");
        fit = solve_lasso(X, y, Vector::Constant(p, lam * sigma), inner, beta);
        double change = (fit.beta - beta).cwiseAbs().maxCoeff();
        beta = fit.beta;
        if (change <= 1e-10 * (1.0 + beta.cwiseAbs().maxCoeff())) break;
    }
    if (it == 2000) throw NonConvergence("square-root lasso: alternating iterations did not settle", 0.0);

    Vector r = y - X * beta;
    double nr = r.norm();
    if (!(nr > 1e-12 * ny)) throw DegenerateFit("square-root lasso: residual vanished");
    fit.beta = beta;
    fit.lam = Vector::Constant(p, lam);
    fit.objective = nr + lam * beta.cwiseAbs().sum();
    fit.iterations = it + 1;
    fill_selection(fit, 1e-8);
    IndexSet inact = fit.inactive();
    Vector c = X.transpose() * r / nr;
    fit.subgrad_inactive.resize(static_cast<Index>(inact.size()));
    for (std::size_t k = 0; k < inact.size(); ++k) fit.subgrad_inactive(static_cast<Index>(k)) = c(inact[k]) / lam;
    // First-order residual on the active block.
    double foc = 0.0;
    for (std::size_t a = 0; a < fit.active.size(); ++a)
        foc = std::max(foc, std::abs(c(fit.active[a]) - lam * fit.signs(static_cast<Index>(a))));
    fit.gap = foc;
    return fit;
}

// ---------------------------------------------------------------------------
// Randomized logistic lasso.
// ---------------------------------------------------------------------------

namespace {

Vector sigmoid(const Vector& eta) {
    Vector p(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
        double e = eta(i);
        if (e >= 0.0) {
            p(i) = 1.0 / (1.0 + std::exp(-e));
        } else {
            double x = std::exp(e);
            p(i) = x / (1.0 + x);
        }
    }
    return p;
}

double log1pexp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void check_binary(const Vector& y) {
    for (Index i = 0; i < y.size(); ++i)
        if (y(i) != 0.0 && y(i) != 1.0) throw InvalidInput("logistic response must be 0/1");
}

} // namespace

LassoFit solve_randomized_logistic_lasso(const Matrix& X, const Vector& y, const Vector& weights,
                                         const Vector& omega, const Vector& start, double tol, int max_iter) {
    Index n = X.rows();
    Index p = X.cols();
    if (y.size() != n) throw InvalidInput("logistic lasso: y has the wrong length");
    if (weights.size() != p || omega.size() != p) throw InvalidInput("logistic lasso: weights/omega length");
    for (Index j = 0; j < p; ++j)
        if (!(weights(j) > 0.0)) throw InvalidInput("logistic lasso: weights must be positive");
    check_binary(y);
    double rn = std::sqrt(static_cast<double>(n));

    Eigen::SelfAdjointEigenSolver<Matrix> eig(X.transpose() * X, Eigen::EigenvaluesOnly);
    double L = (0.25 * eig.eigenvalues().maxCoeff() + 1.0) / rn;
    double step = 1.0 / L;

    auto gradient = [&](const Vector& b) { return Vector((X.transpose() * (sigmoid(X * b) - y) + b) / rn + omega); };
    auto prox = [&](const Vector& v) {
        Vector out(p);
        for (Index j = 0; j < p; ++j) out(j) = soft_threshold(v(j), step * weights(j));
        return out;
    };

    Vector x = start.size() == p ? start : Vector::Zero(p);
    Vector z = x;
    double t = 1.0;
    double gmap = INFINITY;
    int it = 0;
    for (; it < max_iter; ++it) {
        Vector x_new = prox(z - step * gradient(z));
        // Restart momentum when it points uphill.
        if ((z - x_new).dot(x_new - x) > 0.0) {
            t = 1.0;
            z = x;
            x_new = prox(z - step * gradient(z));
        }
        double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = x_new + ((t - 1.0) / t_new) * (x_new - x);
        x = x_new;
        t = t_new;
        if (it % 10 == 0 || it + 1 == max_iter) {
            gmap = ((x - prox(x - step * gradient(x))) / step).norm();
            if (gmap <= tol) break;
        }
    }
    if (!(gmap <= tol)) throw NonConvergence("randomized logistic lasso did not converge", gmap);

    LassoFit fit;
    fit.beta = x;
    fit.lam = weights;
    fit.iterations = it + 1;
    fit.gap = gmap;
    Vector eta = X * x;
    double loss = 0.0;
    for (Index i = 0; i < n; ++i) loss += log1pexp(eta(i)) - y(i) * eta(i);
    fit.objective = loss / rn + omega.dot(x) + weights.dot(x.cwiseAbs()) + 0.5 * x.squaredNorm() / rn;
    fill_selection(fit, 1e-8);
    IndexSet inact = fit.inactive();
    Vector score = X.transpose() * (y - sigmoid(eta));
    fit.subgrad_inactive.resize(static_cast<Index>(inact.size()));
    for (std::size_t k = 0; k < inact.size(); ++k) {
        Index j = inact[k];
        fit.subgrad_inactive(static_cast<Index>(k)) = (score(j) / rn - omega(j)) / weights(j);
    }
    return fit;
}

Vector logistic_kkt_residual(const Matrix& X, const Vector& y, const Vector& weights, const Vector& omega,
                             const LassoFit& fit) {
    double rn = std::sqrt(static_cast<double>(X.rows()));
    Vector score = X.transpose() * (y - sigmoid(X * fit.beta));
    Vector z(X.cols());
    std::vector<bool> is_active(static_cast<std::size_t>(X.cols()), false);
    for (std::size_t a = 0; a < fit.active.size(); ++a) {
        z(fit.active[a]) = fit.signs(static_cast<Index>(a));
        is_active[static_cast<std::size_t>(fit.active[a])] = true;
    }
    for (Index j = 0; j < X.cols(); ++j)
        if (!is_active[static_cast<std::size_t>(j)])
            z(j) = std::clamp((score(j) / rn - omega(j)) / weights(j), -1.0, 1.0);
    return score - rn * (omega + weights.cwiseProduct(z)) - fit.beta;
}

Vector logistic_restricted_mle(const Matrix& XE, const Vector& y) {
    Index n = XE.rows();
    Index k = XE.cols();
    if (y.size() != n) throw InvalidInput("restricted MLE: y has the wrong length");
    check_binary(y);
    if (k == 0) return Vector();
    auto negloglik = [&](const Vector& b) {
        Vector eta = XE * b;
        double s = 0.0;
        for (Index i = 0; i < n; ++i) s += log1pexp(eta(i)) - y(i) * eta(i);
        return s;
    };
    Vector beta = Vector::Zero(k);
    double f = negloglik(beta);
    for (int it = 0; it < 200; ++it) {
        Vector pi = sigmoid(XE * beta);
        Vector grad = XE.transpose() * (y - pi);
        if (grad.cwiseAbs().maxCoeff() <= 1e-12 * std::max<double>(1.0, n)) break;
        Vector w = pi.cwiseProduct(Vector::Ones(n) - pi);
        Matrix H = XE.transpose() * w.asDiagonal() * XE;
        Eigen::LDLT<Matrix> ldlt(H);
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-14 * H.diagonal().maxCoeff()) {
            if (beta.norm() > 1e3) throw SeparationError("restricted MLE diverges: the classes are separated");
            throw RankError("restricted MLE: information matrix is singular");
        }
        Vector dir = ldlt.solve(grad);
        double s = 1.0;
        Vector cand = beta + dir;
        double fc = negloglik(cand);
        while (fc > f + 1e-12 * std::abs(f) && s > 1e-10) {
            s *= 0.5;
            cand = beta + s * dir;
            fc = negloglik(cand);
        }
        double moved = (cand - beta).cwiseAbs().maxCoeff();
        beta = cand;
        f = fc;
        if (beta.norm() > 1e3) throw SeparationError("restricted MLE diverges: the classes are separated");
        if (moved < 1e-15 * (1.0 + beta.cwiseAbs().maxCoeff())) break;
    }
    // A finite MLE cannot classify every row strictly correctly; such a beta
    // is a separating direction.
    Vector eta = XE * beta;
    bool separated = true;
    for (Index i = 0; i < n && separated; ++i) separated = (2.0 * y(i) - 1.0) * eta(i) > 0.0;
    if (separated) throw SeparationError("restricted MLE diverges: the classes are separated");
    Vector grad = XE.transpose() * (y - sigmoid(eta));
    double g = grad.norm() / std::max<double>(1.0, n);
    if (g > 1e-10) throw NonConvergence("restricted MLE: Newton iterations did not converge", g);
    return beta;
}

LinearizableStatistic logistic_statistic(const Matrix& X, const Vector& y, const IndexSet& active, Vector* beta_bar_out,
                                         Matrix* Q_out, Matrix* C_out) {
    Index n = X.rows();
    Index p = X.cols();
    if (active.empty()) throw InvalidInput("logistic statistic needs a non-empty active set");
    IndexSet inact = complement(active, p);
    Matrix XE = select_cols(X, active);
    Matrix XN = select_cols(X, inact);
    Vector beta_bar = logistic_restricted_mle(XE, y);
    Vector pi = sigmoid(XE * beta_bar);
    Vector w = pi.cwiseProduct(Vector::Ones(n) - pi);
    Vector resid = y - pi;
    auto k = static_cast<Index>(active.size());
    auto m = static_cast<Index>(inact.size());

    Matrix Q = XE.transpose() * w.asDiagonal() * XE / static_cast<double>(n);
    Matrix C = XN.transpose() * w.asDiagonal() * XE / static_cast<double>(n);
    Eigen::ColPivHouseholderQR<Matrix> qr(Q);
    if (qr.rank() < k) throw RankError("logistic region: Q is singular");
    Matrix Qinv = qr.inverse();
    Matrix D = C * Qinv;

    LinearizableStatistic T;
    T.n = static_cast<int>(n);
    T.value.resize(p);
    T.value.head(k) = beta_bar;
    T.value.tail(m) = XN.transpose() * resid / static_cast<double>(n);
    T.mean = T.value;
    Matrix infl(n, p);
    Matrix scoreE = XE.array().colwise() * resid.array();  // rows x_{i,E} r_i
    Matrix scoreN = XN.array().colwise() * resid.array();
    infl.leftCols(k) = scoreE * Qinv.transpose();
    infl.rightCols(m) = scoreN - scoreE * D.transpose();
    Matrix centred = infl.rowwise() - infl.colwise().mean();
    T.cov = centred.transpose() * centred / static_cast<double>(n);
    T.cov = 0.5 * (T.cov + T.cov.transpose());
    T.influence = std::move(infl);

    if (beta_bar_out) *beta_bar_out = beta_bar;
    if (Q_out) *Q_out = Q;
    if (C_out) *C_out = C;
    return T;
}

LogisticRegionMatrices logistic_region(const Matrix& X, const Vector& y, const LassoFit& fit,
                                       const Vector& weights) {
    Index p = X.cols();
    if (fit.active.empty()) throw InvalidInput("logistic region needs a non-empty active set");
    if (weights.size() != p) throw InvalidInput("logistic region: weights have the wrong length");

    LogisticRegionMatrices out;
    out.active = fit.active;
    out.inactive = complement(fit.active, p);
    out.T = logistic_statistic(X, y, out.active, &out.beta_bar, &out.Q, &out.C);
    auto k = static_cast<Index>(out.active.size());
    auto m = static_cast<Index>(out.inactive.size());
    Matrix Qinv = out.Q.inverse();
    out.D = out.C * Qinv;

    Matrix S = fit.signs.asDiagonal();
    Vector lamE(k), lamN(m);
    for (Index a = 0; a < k; ++a) lamE(a) = weights(out.active[a]);
    for (Index a = 0; a < m; ++a) lamN(a) = weights(out.inactive[a]);
    Vector lam_s = lamE.cwiseProduct(fit.signs);

    AffineSelectionEvent& ev = out.event;
    ev.scaling = EventScaling::normalized;
    ev.n = static_cast<int>(X.rows());
    ev.A = Matrix::Zero(k + 2 * m, p);
    ev.B = Matrix::Zero(k + 2 * m, p);
    ev.b = Vector::Zero(k + 2 * m);

    ev.A.topLeftCorner(k, k) = -S;
    ev.B.topLeftCorner(k, k) = S * Qinv;
    ev.b.head(k) = -S * Qinv * lam_s;
    if (m > 0) {
        Matrix I = Matrix::Identity(m, m);
        ev.A.block(k, k, m, m) = I;
        ev.A.block(k + m, k, m, m) = -I;
        ev.B.block(k, 0, m, k) = out.D;
        ev.B.block(k, k, m, m) = -I;
        ev.B.block(k + m, 0, m, k) = -out.D;
        ev.B.block(k + m, k, m, m) = I;
        Vector shift = out.D * lam_s;
        ev.b.segment(k, m) = lamN - shift;
        ev.b.segment(k + m, m) = lamN + shift;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Selection on a subset of rows.
// ---------------------------------------------------------------------------

SplitSelection split_select(const Matrix& X, const Vector& y, const IndexSet& rows, double lam) {
    if (rows.size() < 2) throw InvalidInput("split_select: need at least two rows");
    for (Index r : rows)
        if (r < 0 || r >= X.rows()) throw InvalidInput("split_select: row index out of range");
    Matrix Xs = select_rows(X, rows);
    Vector ys = select_rows(y, rows);
    SplitSelection out;
    out.rows = rows;
    out.fit = solve_lasso(Xs, ys, lam);
    AffineSelectionEvent sub = lasso_affine_region(Xs, out.fit.active, out.fit.signs, lam);
    out.event.A = Matrix::Zero(sub.rows(), X.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) out.event.A.col(rows[i]) = sub.A.col(static_cast<Index>(i));
    out.event.b = sub.b;
    out.event.scaling = EventScaling::raw;
    return out;
}

} // namespace selectrand
