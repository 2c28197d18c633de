#include "selectrand/noise.hpp"
#include "selectrand/numerics.hpp"

#include <cmath>
#include <sstream>

namespace selectrand {

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) {
    if (x > 30.0) return x + std::log1p(std::exp(-x));
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

void check_argument(double t, const char* op) {
    if (std::isnan(t)) throw InvalidInput(std::string(op) + ": argument is NaN");
}

void require_continuous(const NoiseDistribution& noise, const char* op) {
    if (noise.is_degenerate())
        throw UnsupportedOperation(std::string(op) + ": the degenerate law has no density");
}

} // namespace

NoiseDistribution::NoiseDistribution(NoiseKind kind, double scale) : kind_(kind), scale_(scale) {
    if (kind_ != NoiseKind::degenerate && !(scale_ > 0.0 && std::isfinite(scale_)))
        throw InvalidInput("NoiseDistribution: scale must be positive and finite");
}

double NoiseDistribution::stddev() const {
    switch (kind_) {
    case NoiseKind::gaussian: return scale_;
    case NoiseKind::laplace: return std::numbers::sqrt2 / scale_;
    case NoiseKind::logistic: return std::numbers::pi / (scale_ * std::sqrt(3.0));
    case NoiseKind::degenerate: return 0.0;
    }
    return 0.0;
}

std::string NoiseDistribution::describe() const {
    std::ostringstream out;
    switch (kind_) {
    case NoiseKind::gaussian: out << "gaussian(gamma=" << scale_ << ")"; break;
    case NoiseKind::laplace: out << "laplace(kappa=" << scale_ << ")"; break;
    case NoiseKind::logistic: out << "logistic(kappa=" << scale_ << ")"; break;
    case NoiseKind::degenerate: out << "degenerate"; break;
    }
    return out.str();
}

NoiseKind parse_noise_kind(const std::string& name) {
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "laplace") return NoiseKind::laplace;
    if (name == "logistic") return NoiseKind::logistic;
    if (name == "degenerate" || name == "none") return NoiseKind::degenerate;
    throw InvalidInput("unknown noise kind '" + name + "'");
}

double log_survival(const NoiseDistribution& noise, double t) {
    check_argument(t, "survival");
    if (t == INFINITY) return -INFINITY;
    if (t == -INFINITY) return 0.0;
    double s = noise.scale();
    switch (noise.kind()) {
    case NoiseKind::gaussian: return normal_log_sf(t / s);
    case NoiseKind::logistic: return -softplus(s * t);
    case NoiseKind::laplace:
        if (t >= 0.0) return std::log(0.5) - s * t;
        return std::log1p(-0.5 * std::exp(s * t));
    case NoiseKind::degenerate: return t < 0.0 ? 0.0 : -INFINITY;
    }
    return 0.0;
}

double survival(const NoiseDistribution& noise, double t) {
    check_argument(t, "survival");
    double s = noise.scale();
    switch (noise.kind()) {
    case NoiseKind::gaussian: return normal_sf(t / s);
    case NoiseKind::logistic:
        // 1 / (1 + e^{kappa t}) written to avoid overflow on either side.
        if (s * t > 0.0) {
            double e = std::exp(-s * t);
            return e / (1.0 + e);
        }
        return 1.0 / (1.0 + std::exp(s * t));
    case NoiseKind::laplace:
        if (t >= 0.0) return 0.5 * std::exp(-s * t);
        return 1.0 - 0.5 * std::exp(s * t);
    case NoiseKind::degenerate: return t < 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

double cdf(const NoiseDistribution& noise, double t) {
    check_argument(t, "cdf");
    // All non-degenerate kinds are symmetric about zero.
    if (noise.is_degenerate()) return t < 0.0 ? 0.0 : 1.0;
    return survival(noise, -t);
}

double log_cdf(const NoiseDistribution& noise, double t) {
    check_argument(t, "cdf");
    if (noise.is_degenerate()) return t < 0.0 ? -INFINITY : 0.0;
    return log_survival(noise, -t);
}

double log_density(const NoiseDistribution& noise, double w) {
    require_continuous(noise, "density");
    check_argument(w, "density");
    double s = noise.scale();
    double a = std::abs(w);
    switch (noise.kind()) {
    case NoiseKind::gaussian: return normal_log_pdf(w / s) - std::log(s);
    case NoiseKind::logistic: return std::log(s) - s * a - 2.0 * std::log1p(std::exp(-s * a));
    case NoiseKind::laplace: return std::log(0.5 * s) - s * a;
    case NoiseKind::degenerate: break;
    }
    return -INFINITY;
}

double density(const NoiseDistribution& noise, double w) { return std::exp(log_density(noise, w)); }

double density_derivative(const NoiseDistribution& noise, double w, int k) {
    require_continuous(noise, "density_derivative");
    check_argument(w, "density_derivative");
    if (k < 0 || k > 3) throw InvalidInput("density_derivative: order must be in 0..3");
    double s = noise.scale();
    switch (noise.kind()) {
    case NoiseKind::gaussian: {
        double x = w / s;
        double hermite[4] = {1.0, x, x * x - 1.0, x * x * x - 3.0 * x};
        double sign = (k % 2 == 0) ? 1.0 : -1.0;
        return sign * hermite[k] * normal_pdf(x) / std::pow(s, k + 1);
    }
    case NoiseKind::logistic: {
        // With p = G(w): g = kappa p(1-p), dp/dw = kappa p(1-p).
        double e = std::exp(-s * std::abs(w));
        double p = (w >= 0.0) ? 1.0 / (1.0 + e) : e / (1.0 + e);
        double pq = e / ((1.0 + e) * (1.0 + e));
        double poly[4] = {1.0, 1.0 - 2.0 * p, 1.0 - 6.0 * p + 6.0 * p * p,
                          (1.0 - 2.0 * p) * (1.0 - 12.0 * p + 12.0 * p * p)};
        return std::pow(s, k + 1) * pq * poly[k];
    }
    case NoiseKind::laplace: {
        // One-sided derivatives agree away from the kink; at w = 0 odd orders are 0.
        double sgn = (w > 0.0) ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
        double base = 0.5 * s * std::exp(-s * std::abs(w));
        if (k == 0) return base;
        return std::pow(-s * sgn, k) * base;
    }
    case NoiseKind::degenerate: break;
    }
    return 0.0;
}

double draw(const NoiseDistribution& noise, Rng& rng) {
    double s = noise.scale();
    switch (noise.kind()) {
    case NoiseKind::gaussian: return s * standard_normal(rng);
    case NoiseKind::logistic: {
        double u = uniform_open(rng);
        return std::log(u / (1.0 - u)) / s;
    }
    case NoiseKind::laplace: {
        double u = uniform_open(rng) - 0.5;
        double sign = u < 0.0 ? -1.0 : 1.0;
        return -sign * std::log1p(-2.0 * std::abs(u)) / s;
    }
    case NoiseKind::degenerate: return 0.0;
    }
    return 0.0;
}

double draw_above(const NoiseDistribution& noise, double lower, Rng& rng) {
    check_argument(lower, "draw_above");
    double s = noise.scale();
    double log_u = std::log(uniform_open(rng));
    switch (noise.kind()) {
    case NoiseKind::gaussian: return s * truncated_normal(rng, lower / s, INFINITY);
    case NoiseKind::logistic: {
        double log_sf = log_survival(noise, lower) + log_u;
        // survival^{-1}(q) = log((1 - q) / q) / kappa
        return (std::log(-std::expm1(log_sf)) - log_sf) / s;
    }
    case NoiseKind::laplace: {
        double log_sf = log_survival(noise, lower) + log_u;
        if (log_sf <= std::log(0.5)) return -(std::log(2.0) + log_sf) / s;
        return std::log(2.0 * -std::expm1(log_sf)) / s;
    }
    case NoiseKind::degenerate:
        if (lower < 0.0) return 0.0;
        throw InvalidInput("draw_above: point mass at zero lies below the bound");
    }
    return 0.0;
}

std::vector<double> sample(const NoiseDistribution& noise, std::uint64_t seed, std::size_t count) {
    Rng rng(mix_seed(seed));
    std::vector<double> out(count);
    for (auto& v : out) v = draw(noise, rng);
    return out;
}

} // namespace selectrand
