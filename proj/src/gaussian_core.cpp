#include "selectrand/gaussian_core.hpp"
#include "selectrand/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace selectrand {

void LinearizableStatistic::validate() const {
    Index p = value.size();
    if (p == 0) throw InvalidInput("linearizable statistic is empty");
    if (mean.size() != 0 && mean.size() != p) throw InvalidInput("mean has the wrong dimension");
    if (cov.rows() != p || cov.cols() != p) throw InvalidInput("covariance has the wrong shape");
    if (n < 1) throw InvalidInput("sample size must be positive");
    double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InvalidInput("covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale) throw InvalidInput("covariance is not positive semidefinite");
    if (influence && (influence->cols() != p || influence->rows() != n))
        throw InvalidInput("influence matrix must be n x p");
}

ContrastDecomposition decompose(const LinearizableStatistic& stat, const Vector& eta) {
    stat.validate();
    if (eta.size() != stat.dim()) throw InvalidInput("contrast has the wrong dimension");
    ContrastDecomposition d;
    d.eta = eta;
    Vector sigma_eta = stat.cov * eta;
    d.sigma_eta_sq = eta.dot(sigma_eta);
    if (!(d.sigma_eta_sq > 1e-12)) throw DegenerateContrast("contrast has (near) zero variance");
    d.eta_T = eta.dot(stat.value);
    d.direction = sigma_eta / d.sigma_eta_sq;
    d.V_eta = stat.value - d.direction * d.eta_T;
    return d;
}

SelectionProbabilityFn SelectionProbabilityFn::from_log(LogWeight log_q, std::vector<double> breakpoints) {
    if (!log_q) throw InvalidInput("selection probability callable is empty");
    return SelectionProbabilityFn(std::move(log_q), std::move(breakpoints));
}

SelectionProbabilityFn SelectionProbabilityFn::from_probability(std::function<double(double)> q,
                                                                std::vector<double> breakpoints) {
    if (!q) throw InvalidInput("selection probability callable is empty");
    return SelectionProbabilityFn(
        [q = std::move(q)](double t) {
            double v = q(t);
            if (!(v >= 0.0 && v <= 1.0 + 1e-12)) throw InvalidInput("selection probability outside [0, 1]");
            return v > 0.0 ? std::log(std::min(v, 1.0)) : -INFINITY;
        },
        std::move(breakpoints));
}

SelectionProbabilityFn SelectionProbabilityFn::always() {
    return SelectionProbabilityFn([](double) { return 0.0; }, {});
}

SelectionProbabilityFn SelectionProbabilityFn::indicator_above(double c) {
    return SelectionProbabilityFn([c](double t) { return t > c ? 0.0 : -INFINITY; }, {c});
}

double SelectionProbabilityFn::operator()(double t) const { return std::exp(log_q_(t)); }

double exact_pivot(const ContrastDecomposition& decomp, const SelectionProbabilityFn& q, double mu_eta, int n) {
    if (n < 1) throw InvalidInput("exact_pivot: sample size must be positive");
    if (!std::isfinite(mu_eta)) throw InvalidInput("exact_pivot: hypothesised mean must be finite");
    double scale = std::sqrt(decomp.sigma_eta_sq / n);
    return weighted_gaussian_tail(mu_eta, scale, q.log_weight(), decomp.eta_T, q.breakpoints());
}

namespace {

// Order statistic for probability level u: x_(ceil(n u)), 1-indexed.
double order_quantile(const std::vector<double>& sorted, double u) {
    auto n = static_cast<double>(sorted.size());
    auto k = static_cast<std::size_t>(std::clamp(std::ceil(n * u), 1.0, n));
    return sorted[k - 1];
}

double sorted_median(const std::vector<double>& sorted) {
    std::size_t n = sorted.size();
    return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double density_from_sorted(const std::vector<double>& sorted) {
    double rn = std::sqrt(static_cast<double>(sorted.size()));
    double a = order_quantile(sorted, 0.5 - 1.0 / rn);
    double b = order_quantile(sorted, 0.5 + 1.0 / rn);
    if (!(b > a)) throw DegenerateDensity("median density estimate: quantile spacing collapsed");
    return 2.0 / (rn * (b - a));
}

std::vector<double> sorted_copy(std::span<const double> sample) {
    if (sample.size() < 25) throw InvalidInput("median statistics need at least 25 observations");
    std::vector<double> s(sample.begin(), sample.end());
    for (double x : s)
        if (!std::isfinite(x)) throw InvalidInput("sample contains a non-finite value");
    std::sort(s.begin(), s.end());
    return s;
}

} // namespace

double median_density_estimate(std::span<const double> sample) { return density_from_sorted(sorted_copy(sample)); }

LinearizableStatistic median_linearize(std::span<const double> sample, std::optional<double> center) {
    auto sorted = sorted_copy(sample);
    double f_hat = density_from_sorted(sorted);
    double med = sorted_median(sorted);
    double m = center.value_or(med);
    auto n = static_cast<Index>(sample.size());

    LinearizableStatistic stat;
    stat.n = static_cast<int>(n);
    stat.value = Vector::Constant(1, med);
    stat.mean = Vector::Constant(1, m);
    stat.cov = Matrix::Constant(1, 1, 1.0 / (4.0 * f_hat * f_hat));
    Matrix infl(n, 1);
    for (Index i = 0; i < n; ++i) infl(i, 0) = ((sample[i] > m ? 1.0 : 0.0) - 0.5) / f_hat;
    stat.influence = std::move(infl);
    return stat;
}

double best_median_pivot(std::span<const double> group1, std::span<const double> group2, double omega,
                         const NoiseDistribution& noise, double mu0) {
    if (noise.kind() != NoiseKind::logistic) throw InvalidInput("best_median_pivot expects logistic randomization");
    if (group1.size() != group2.size()) throw InvalidInput("best_median_pivot: groups must have equal size");
    auto s1 = sorted_copy(group1);
    auto s2 = sorted_copy(group2);
    double t1 = sorted_median(s1);
    double t2 = sorted_median(s2);
    double n = static_cast<double>(s1.size());
    double rn = std::sqrt(n);
    if (!(t1 > t2 + omega / rn)) throw SelectionViolated("best_median_pivot: group 1 was not selected");
    double f1 = density_from_sorted(s1);
    double sigma1 = 1.0 / (2.0 * f1);
    LogWeight w = [&noise, rn, t2](double t) { return log_cdf(noise, rn * (t - t2)); };
    return weighted_gaussian_tail(mu0, sigma1 / rn, w, t1);
}

Matrix bootstrap_cov(const Matrix& data, const StatisticFn& statistic, int B, std::uint64_t seed) {
    if (B < 100) throw InvalidInput("bootstrap_cov: need at least 100 resamples");
    if (data.rows() < 2) throw InvalidInput("bootstrap_cov: need at least two rows");
    Index n = data.rows();
    std::vector<Vector> stats(static_cast<std::size_t>(B));
    parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        Matrix resample(n, data.cols());
        std::uniform_int_distribution<Index> pick(0, n - 1);
        for (Index i = 0; i < n; ++i) resample.row(i) = data.row(pick(rng));
        try {
            stats[b] = statistic(resample);
        } catch (const std::exception& e) {
            throw ResampleError("bootstrap resample " + std::to_string(b) + ": " + e.what(), b);
        }
    });
    Index p = stats.front().size();
    Vector mean = Vector::Zero(p);
    for (const auto& s : stats) {
        if (s.size() != p) throw InvalidInput("bootstrap_cov: statistic changed dimension");
        mean += s;
    }
    mean /= B;
    Matrix cov = Matrix::Zero(p, p);
    for (const auto& s : stats) cov.noalias() += (s - mean) * (s - mean).transpose();
    cov *= static_cast<double>(n) / (B - 1);
    cov = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    Vector vals = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

} // namespace selectrand
