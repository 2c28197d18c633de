#pragma once

#include "selectrand/common.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <span>

namespace selectrand {

// ---------------------------------------------------------------------------
// Standard normal helpers. The log-space variants stay finite far into the
// tails (|x| in the hundreds), which the pivots rely on.
// ---------------------------------------------------------------------------

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_log_pdf(double x) {
    return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// log(1 - Phi(x)).
double normal_log_sf(double x);

/// log(Phi(x)).
inline double normal_log_cdf(double x) { return normal_log_sf(-x); }

/// Phi^{-1}(p) for p in (0, 1).
double normal_quantile(double p);

/// Inverse of normal_log_sf: returns x with log(1 - Phi(x)) = log_p, log_p < 0.
double normal_isf_log(double log_p);

/// log(exp(a) - exp(b)) for a >= b.
inline double log_diff_exp(double a, double b) {
    if (b == -INFINITY) return a;
    return a + std::log1p(-std::exp(b - a));
}

inline double log_add_exp(double a, double b) {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

/// Draws from N(0,1) restricted to [lo, hi]; either end may be infinite.
double truncated_normal(Rng& rng, double lo, double hi);

/// log P(lo <= Z <= hi), Z ~ N(0,1).
double normal_log_interval(double lo, double hi);

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.
// ---------------------------------------------------------------------------

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
    bool converged = false;
};

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol, double rel_tol = 1e-12, int max_intervals = 4000);

// ---------------------------------------------------------------------------
// Goodness of fit helpers used by the simulation studies.
// ---------------------------------------------------------------------------

/// Kolmogorov-Smirnov distance between the empirical law of values and the
/// continuous cdf.
double ks_statistic(std::span<const double> values, const std::function<double(double)>& cdf);

inline double ks_uniform_statistic(std::span<const double> values) {
    return ks_statistic(values, [](double u) { return std::clamp(u, 0.0, 1.0); });
}

/// Asymptotic one-sample KS critical values, c(alpha)/sqrt(m).
inline double ks_critical_95(std::size_t m) { return 1.3581 / std::sqrt(static_cast<double>(m)); }
inline double ks_critical_99(std::size_t m) { return 1.6276 / std::sqrt(static_cast<double>(m)); }

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_and_se(std::span<const double> values);

double sample_variance(std::span<const double> values);

} // namespace selectrand
