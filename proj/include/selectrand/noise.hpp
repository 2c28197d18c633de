#pragma once

#include "selectrand/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace selectrand {

enum class NoiseKind { gaussian, laplace, logistic, degenerate };

/// A randomization law G.
///
/// Logistic and Laplace are parameterized by the rate kappa:
///   logistic:  G(w) = e^{kappa w} / (1 + e^{kappa w})
///   laplace:   g(w) = (kappa / 2) e^{-kappa |w|}
/// Gaussian uses its standard deviation gamma. The degenerate law is the point
/// mass at zero, so non-randomized selection runs through the same code.
class NoiseDistribution {
public:
    static NoiseDistribution gaussian(double gamma) { return {NoiseKind::gaussian, gamma}; }
    static NoiseDistribution laplace(double kappa) { return {NoiseKind::laplace, kappa}; }
    static NoiseDistribution logistic(double kappa) { return {NoiseKind::logistic, kappa}; }
    static NoiseDistribution degenerate() { return {NoiseKind::degenerate, 1.0}; }

    NoiseDistribution(NoiseKind kind, double scale);

    NoiseKind kind() const noexcept { return kind_; }
    double scale() const noexcept { return scale_; }
    bool is_degenerate() const noexcept { return kind_ == NoiseKind::degenerate; }

    /// Standard deviation of a draw.
    double stddev() const;

    std::string describe() const;

    friend bool operator==(const NoiseDistribution&, const NoiseDistribution&) = default;

private:
    NoiseKind kind_;
    double scale_;
};

NoiseKind parse_noise_kind(const std::string& name);

/// Survival function: P(omega > t).
double survival(const NoiseDistribution& noise, double t);
double log_survival(const NoiseDistribution& noise, double t);

/// P(omega <= t).
double cdf(const NoiseDistribution& noise, double t);
double log_cdf(const NoiseDistribution& noise, double t);

/// Density (non-degenerate kinds only).
double density(const NoiseDistribution& noise, double w);
double log_density(const NoiseDistribution& noise, double w);

/// k-th derivative of the density, k in {0, 1, 2, 3}.
double density_derivative(const NoiseDistribution& noise, double w, int k);

double draw(const NoiseDistribution& noise, Rng& rng);

/// Draw conditioned on omega > lower (inverse survival in log space).
double draw_above(const NoiseDistribution& noise, double lower, Rng& rng);

/// count i.i.d. draws, reproducible from seed.
std::vector<double> sample(const NoiseDistribution& noise, std::uint64_t seed, std::size_t count);

} // namespace selectrand
