#pragma once

#include "selectrand/common.hpp"
#include "selectrand/noise.hpp"
#include "selectrand/weighted_gaussian.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace selectrand {

/// T with sqrt(n)(T - mean) approximately N(0, cov), optionally with the
/// per-observation influence terms xi_i whose average linearizes T.
struct LinearizableStatistic {
    Vector value;
    Vector mean;
    Matrix cov;
    int n = 0;
    std::optional<Matrix> influence;  // n x p

    Index dim() const { return value.size(); }
    /// Throws InvalidInput on shape mismatch, asymmetric or indefinite cov.
    void validate() const;
};

/// T = (Sigma eta / sigma_eta^2) eta'T + V_eta.
struct ContrastDecomposition {
    Vector eta;
    double eta_T = 0.0;
    Vector V_eta;
    double sigma_eta_sq = 0.0;
    Vector direction;  // Sigma eta / sigma_eta^2

    Vector reconstruct() const { return direction * eta_T + V_eta; }
};

ContrastDecomposition decompose(const LinearizableStatistic& stat, const Vector& eta);

/// t -> Q(t; V_eta): probability over the randomization that the observed
/// model is selected when eta'T = t and everything orthogonal is held fixed.
/// Carried in log space; breakpoints mark discontinuities.
class SelectionProbabilityFn {
public:
    static SelectionProbabilityFn from_log(LogWeight log_q, std::vector<double> breakpoints = {});
    static SelectionProbabilityFn from_probability(std::function<double(double)> q,
                                                   std::vector<double> breakpoints = {});
    /// Q == 1.
    static SelectionProbabilityFn always();
    /// Q(t) = 1{t > c}.
    static SelectionProbabilityFn indicator_above(double c);

    double operator()(double t) const;
    double log(double t) const { return log_q_(t); }
    const LogWeight& log_weight() const { return log_q_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }

private:
    SelectionProbabilityFn(LogWeight log_q, std::vector<double> breakpoints)
        : log_q_(std::move(log_q)), breakpoints_(std::move(breakpoints)) {}
    LogWeight log_q_;
    std::vector<double> breakpoints_;
};

/// P(eta'T >= observed | selection) when eta'T ~ N(mu_eta, sigma_eta^2 / n)
/// reweighted by q. Increasing in mu_eta.
double exact_pivot(const ContrastDecomposition& decomp, const SelectionProbabilityFn& q, double mu_eta, int n);

/// Sample median with density-at-median estimated from the 1/2 -/+ 1/sqrt(n)
/// order statistics. Influence rows are centred at `center` when given (the
/// true median in simulations) and at the sample median otherwise.
LinearizableStatistic median_linearize(std::span<const double> sample, std::optional<double> center = {});

/// f_hat(m) = 2 / (sqrt(n) (b_n - a_n)).
double median_density_estimate(std::span<const double> sample);

/// Pivot for the median of group 1 after group 1 was reported as better:
/// sqrt(n)(T1 - T2) > omega, omega logistic. Variance of T1 plugged in from
/// median_density_estimate on group 1.
double best_median_pivot(std::span<const double> group1, std::span<const double> group2, double omega,
                         const NoiseDistribution& noise, double mu0);

class ResampleError : public Error {
public:
    ResampleError(const std::string& what, std::size_t index) : Error(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

using StatisticFn = std::function<Vector(const Matrix&)>;

/// Pairs bootstrap estimate of the covariance of sqrt(n) * statistic(data).
/// Symmetrized and projected onto the PSD cone.
Matrix bootstrap_cov(const Matrix& data, const StatisticFn& statistic, int B, std::uint64_t seed);

} // namespace selectrand
