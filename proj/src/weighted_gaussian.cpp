#include "selectrand/weighted_gaussian.hpp"
#include "selectrand/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace selectrand {

namespace {

// Mass further than this many nats below the peak is dropped (~1e-20).
constexpr double kLogDrop = 46.0;

double log_integrand(const LogWeight& log_weight, double center, double scale, double z) {
    double lw = log_weight(center + scale * z);
    if (std::isnan(lw)) throw InvalidInput("selection weight returned NaN");
    if (lw > 1e-12) throw InvalidInput("selection weight exceeds one");
    return -0.5 * z * z + std::min(lw, 0.0);
}

} // namespace

WeightedGaussianSupport locate_support(double center, double scale, const LogWeight& log_weight,
                                       const std::vector<double>& breakpoints) {
    if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(center))
        throw InvalidInput("weighted gaussian: center must be finite and scale positive");

    WeightedGaussianSupport support;
    support.center = center;
    support.scale = scale;

    std::vector<double> z_breaks;
    for (double b : breakpoints) {
        double z = (b - center) / scale;
        if (std::isfinite(z)) z_breaks.push_back(z);
    }
    std::sort(z_breaks.begin(), z_breaks.end());

    double radius = 64.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
        double step = radius / 256.0;
        std::vector<double> zs;
        for (int i = -256; i <= 256; ++i) zs.push_back(step * i);
        for (double zb : z_breaks) {
            if (std::abs(zb) > radius) continue;
            double eps = 1e-9 * std::max(1.0, std::abs(zb));
            zs.push_back(zb - eps);
            zs.push_back(zb + eps);
        }
        std::sort(zs.begin(), zs.end());

        std::vector<double> hs(zs.size());
        double peak = -INFINITY;
        for (std::size_t i = 0; i < zs.size(); ++i) {
            hs[i] = log_integrand(log_weight, center, scale, zs[i]);
            peak = std::max(peak, hs[i]);
        }
        if (peak == -INFINITY) {
            radius *= 4.0;
            continue;
        }
        // Because log W <= 0 the integrand is below -z^2/2, so all relevant
        // mass sits inside this bound.
        double bound = std::sqrt(2.0 * (kLogDrop - peak));
        if (bound > radius + step) {
            radius = bound + 1.0;
            continue;
        }
        std::size_t first = zs.size();
        std::size_t last = 0;
        for (std::size_t i = 0; i < zs.size(); ++i) {
            if (hs[i] >= peak - kLogDrop) {
                first = std::min(first, i);
                last = i;
            }
        }
        support.log_peak = peak;
        support.z_lo = std::max(-bound, first > 0 ? zs[first - 1] : zs[first] - step);
        support.z_hi = std::min(bound, last + 1 < zs.size() ? zs[last + 1] : zs[last] + step);
        if (!(support.z_lo < support.z_hi)) {
            support.z_lo -= step;
            support.z_hi += step;
        }
        for (double zb : z_breaks)
            if (zb > support.z_lo && zb < support.z_hi) support.z_breaks.push_back(zb);
        return support;
    }
    throw SelectionUnderflow("selection probability underflows everywhere on the search range", 0.0);
}

namespace {

double integrate_support(const WeightedGaussianSupport& s, const LogWeight& log_weight, double za,
                         double zb) {
    if (!(za < zb)) return 0.0;
    auto f = [&](double z) {
        return std::exp(log_integrand(log_weight, s.center, s.scale, z) - s.log_peak);
    };
    std::vector<double> cuts{za};
    for (double b : s.z_breaks)
        if (b > za && b < zb) cuts.push_back(b);
    cuts.push_back(zb);
    double total = 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto r = integrate(f, cuts[i], cuts[i + 1], 1e-300, 1e-12, 4000);
        total += r.value;
        err += r.error;
    }
    if (err > 1e-9 * std::max(total, 1e-300) && err > 1e-14)
        throw NumericalFailure("weighted gaussian quadrature did not converge", err);
    return total;
}

} // namespace

double weighted_gaussian_tail(double center, double scale, const LogWeight& log_weight, double t_obs,
                              const std::vector<double>& breakpoints) {
    if (std::isnan(t_obs)) throw InvalidInput("weighted gaussian tail: observation is NaN");
    auto s = locate_support(center, scale, log_weight, breakpoints);
    double z_obs = (t_obs - center) / scale;
    if (z_obs <= s.z_lo) return 1.0;
    if (z_obs >= s.z_hi) return 0.0;
    double left = integrate_support(s, log_weight, s.z_lo, z_obs);
    double right = integrate_support(s, log_weight, z_obs, s.z_hi);
    double denom = left + right;
    if (!(denom > 0.0)) throw SelectionUnderflow("pivot denominator vanished", denom);
    return std::clamp(right / denom, 0.0, 1.0);
}

double weighted_gaussian_log_mass(double center, double scale, const LogWeight& log_weight,
                                  const std::vector<double>& breakpoints) {
    auto s = locate_support(center, scale, log_weight, breakpoints);
    double mass = integrate_support(s, log_weight, s.z_lo, s.z_hi);
    // The integral is of exp(h - peak) dz with h carrying the N(0,1) kernel
    // without its normalizing constant.
    return std::log(mass) + s.log_peak - 0.5 * std::log(2.0 * std::numbers::pi);
}

WeightedGaussianTable::WeightedGaussianTable(double center, double scale, LogWeight log_weight,
                                             const std::vector<double>& breakpoints)
    : support_(locate_support(center, scale, log_weight, breakpoints)), log_weight_(std::move(log_weight)) {
    std::vector<double> anchors{support_.z_lo};
    for (double b : support_.z_breaks) anchors.push_back(b);
    anchors.push_back(support_.z_hi);
    constexpr double kPanelWidth = 0.1;
    for (std::size_t i = 0; i + 1 < anchors.size(); ++i) {
        double a = anchors[i];
        double b = anchors[i + 1];
        int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / kPanelWidth)));
        for (int k = 0; k < pieces; ++k) edges_.push_back(a + (b - a) * k / pieces);
    }
    edges_.push_back(support_.z_hi);

    std::vector<double> panel_mass(edges_.size() - 1);
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
        panel_mass[i] = integrate_z(edges_[i], edges_[i + 1]);
        auto r1 = integrate([&](double z) { return z * density_z(z); }, edges_[i], edges_[i + 1], 1e-300,
                            1e-11, 200);
        auto r2 = integrate([&](double z) { return z * z * density_z(z); }, edges_[i], edges_[i + 1],
                            1e-300, 1e-11, 200);
        m1 += r1.value;
        m2 += r2.value;
    }
    upper_mass_.assign(edges_.size(), 0.0);
    for (std::size_t i = edges_.size() - 1; i-- > 0;) upper_mass_[i] = upper_mass_[i + 1] + panel_mass[i];
    total_ = upper_mass_.front();
    if (!(total_ > 0.0)) throw SelectionUnderflow("weighted gaussian table has no mass", total_);
    double mz = m1 / total_;
    double vz = std::max(0.0, m2 / total_ - mz * mz);
    mean_ = center + scale * mz;
    variance_ = scale * scale * vz;
}

double WeightedGaussianTable::density_z(double z) const {
    return std::exp(log_integrand(log_weight_, support_.center, support_.scale, z) - support_.log_peak);
}

double WeightedGaussianTable::integrate_z(double za, double zb) const {
    if (!(za < zb)) return 0.0;
    auto r = integrate([this](double z) { return density_z(z); }, za, zb, 1e-300, 1e-13, 200);
    return r.value;
}

double WeightedGaussianTable::tail(double t) const {
    if (std::isnan(t)) throw InvalidInput("tail: NaN argument");
    double z = (t - support_.center) / support_.scale;
    if (z <= edges_.front()) return 1.0;
    if (z >= edges_.back()) return 0.0;
    auto it = std::upper_bound(edges_.begin(), edges_.end(), z);
    std::size_t k = static_cast<std::size_t>(it - edges_.begin()) - 1;
    double mass = upper_mass_[k + 1] + integrate_z(z, edges_[k + 1]);
    return std::clamp(mass / total_, 0.0, 1.0);
}

double WeightedGaussianTable::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw InvalidInput("quantile: u must lie in (0, 1)");
    double target = (1.0 - u) * total_;
    // upper_mass_ is decreasing; find the panel containing the target.
    std::size_t k = 0;
    while (k + 1 < upper_mass_.size() && upper_mass_[k + 1] > target) ++k;
    double lo = edges_[k];
    double hi = edges_[k + 1];
    for (int it = 0; it < 60 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
        double mid = 0.5 * (lo + hi);
        double mass = upper_mass_[k + 1] + integrate_z(mid, edges_[k + 1]);
        if (mass > target)
            lo = mid;
        else
            hi = mid;
    }
    return support_.center + support_.scale * 0.5 * (lo + hi);
}

} // namespace selectrand
