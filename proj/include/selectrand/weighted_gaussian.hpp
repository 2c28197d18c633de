#pragma once

#include "selectrand/common.hpp"

#include <functional>
#include <vector>

namespace selectrand {

/// log W(t) for a selection weight W(t) in [0, 1]. May return -inf.
using LogWeight = std::function<double(double)>;

/// Support summary of the density proportional to W(t) * phi((t - center) / scale).
/// Everything is carried in the standardized coordinate z = (t - center) / scale
/// and relative to the peak log density, so selection probabilities far below
/// the double range still give finite ratios.
struct WeightedGaussianSupport {
    double center = 0.0;
    double scale = 1.0;
    double z_lo = 0.0;
    double z_hi = 0.0;
    double log_peak = 0.0;            // max over the scan of -z^2/2 + log W
    std::vector<double> z_breaks;     // weight discontinuities inside [z_lo, z_hi]
};

/// Locates the region holding all but ~e^{-46} of the mass. Throws
/// SelectionUnderflow if the weight vanishes everywhere it was probed.
WeightedGaussianSupport locate_support(double center, double scale, const LogWeight& log_weight,
                                       const std::vector<double>& breakpoints = {});

/// P(T >= t_obs) for T with density proportional to W(t) phi((t - center)/scale).
/// Adaptive quadrature to ~1e-12 relative accuracy.
double weighted_gaussian_tail(double center, double scale, const LogWeight& log_weight, double t_obs,
                              const std::vector<double>& breakpoints = {});

/// log E[W(T)], T ~ N(center, scale^2).
double weighted_gaussian_log_mass(double center, double scale, const LogWeight& log_weight,
                                  const std::vector<double>& breakpoints = {});

/// Tabulated version for evaluating many tails of one law. The weight must be
/// smooth between declared breakpoints.
class WeightedGaussianTable {
public:
    WeightedGaussianTable(double center, double scale, LogWeight log_weight,
                          const std::vector<double>& breakpoints = {});

    /// P(T >= t).
    double tail(double t) const;
    double cdf(double t) const { return 1.0 - tail(t); }
    /// t with P(T <= t) = u.
    double quantile(double u) const;
    double mean() const { return mean_; }
    double variance() const { return variance_; }

private:
    double integrate_z(double za, double zb) const;
    double density_z(double z) const;

    WeightedGaussianSupport support_;
    LogWeight log_weight_;
    std::vector<double> edges_;       // panel edges in z
    std::vector<double> upper_mass_;  // mass to the right of each edge
    double total_ = 0.0;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

} // namespace selectrand
