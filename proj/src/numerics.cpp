#include "selectrand/numerics.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <vector>

namespace selectrand {

double normal_log_sf(double x) {
    if (x < 30.0) return std::log(normal_sf(x));
    // Mills ratio asymptotic series; at x >= 30 the truncation error is
    // below 1e-12 relative.
    double inv2 = 1.0 / (x * x);
    double series = 1.0 - inv2 * (1.0 - 3.0 * inv2 * (1.0 - 5.0 * inv2 * (1.0 - 7.0 * inv2)));
    return -0.5 * x * x - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -INFINITY;
        if (p == 1.0) return INFINITY;
        throw InvalidInput("normal_quantile: p outside [0, 1]");
    }
    // Acklam's rational approximation followed by one Halley step.
    static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                             -2.759285104469687e+02, 1.383577518672690e+02,
                                             -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                             -1.556989798598866e+02, 6.680131188771972e+01,
                                             -1.328068155288572e+01};
    static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                             -2.400758277161838e+00, -2.549732539343734e+00,
                                             4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                             2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double e = (p < 0.5) ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
    double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

double normal_isf_log(double log_p) {
    if (!(log_p <= 0.0)) throw InvalidInput("normal_isf_log: log probability must be <= 0");
    if (log_p == 0.0) return -INFINITY;
    if (log_p == -INFINITY) return INFINITY;
    double x;
    if (log_p > -700.0) {
        double p = std::exp(log_p);
        x = (p > 0.5) ? normal_quantile(-std::expm1(log_p)) : -normal_quantile(p);
        if (log_p > -1e-3) return x;
    } else {
        double t = -2.0 * log_p;
        x = std::sqrt(t - std::log(t * 2.0 * std::numbers::pi));
    }
    // Newton on log sf, which is concave in x.
    for (int it = 0; it < 50; ++it) {
        double ls = normal_log_sf(x);
        double slope = -std::exp(normal_log_pdf(x) - ls);
        double step = (ls - log_p) / slope;
        x -= step;
        if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

double normal_log_interval(double lo, double hi) {
    if (!(lo < hi)) return -INFINITY;
    if (lo >= 0.0) return log_diff_exp(normal_log_sf(lo), normal_log_sf(hi));
    if (hi <= 0.0) return log_diff_exp(normal_log_cdf(hi), normal_log_cdf(lo));
    return std::log1p(-normal_sf(hi) - normal_cdf(lo));
}

double truncated_normal(Rng& rng, double lo, double hi) {
    if (!(lo < hi)) {
        if (lo == hi) return lo;
        throw InvalidInput("truncated_normal: empty interval");
    }
    double u = uniform_open(rng);
    if (lo >= 0.0) {
        // Work with the upper tail in log space.
        double la = normal_log_sf(lo);
        double lb = normal_log_sf(hi);
        double target = la + std::log1p(-u * -std::expm1(lb - la));
        return std::clamp(normal_isf_log(target), lo, hi);
    }
    if (hi <= 0.0) {
        double la = normal_log_sf(-hi);
        double lb = normal_log_sf(-lo);
        double target = la + std::log1p(-u * -std::expm1(lb - la));
        return std::clamp(-normal_isf_log(target), lo, hi);
    }
    double cl = normal_cdf(lo);
    double ch = normal_cdf(hi);
    double p = cl + u * (ch - cl);
    return std::clamp(normal_quantile(p), lo, hi);
}

namespace {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
constexpr std::array<double, 8> kXgk{0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                     0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                     0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                     0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk{0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                     0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                     0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                     0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg{0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

Panel gauss_kronrod(const std::function<double(double)>& f, double a, double b) {
    double center = 0.5 * (a + b);
    double half = 0.5 * (b - a);
    double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        double dx = half * kXgk[j];
        double sum = f(center - dx) + f(center + dx);
        kronrod += kWgk[j] * sum;
        if (j % 2 == 1) gauss += kWg[j / 2] * sum;
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

} // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol, double rel_tol, int max_intervals) {
    QuadratureResult result;
    if (a == b) {
        result.converged = true;
        return result;
    }
    if (!(std::isfinite(a) && std::isfinite(b))) throw InvalidInput("integrate: bounds must be finite");
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    std::priority_queue<Panel> panels;
    Panel first = gauss_kronrod(f, a, b);
    double total = first.value;
    double error = first.error;
    panels.push(first);
    int count = 1;
    while (error > std::max(abs_tol, rel_tol * std::abs(total)) && count < max_intervals) {
        Panel worst = panels.top();
        panels.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            panels.push(worst);
            break;
        }
        Panel left = gauss_kronrod(f, worst.a, mid);
        Panel right = gauss_kronrod(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
        ++count;
    }
    // Re-sum to shed accumulated rounding from the running updates.
    double value = 0.0;
    double err = 0.0;
    while (!panels.empty()) {
        value += panels.top().value;
        err += panels.top().error;
        panels.pop();
    }
    result.value = sign * value;
    result.error = err;
    result.intervals = count;
    result.converged = err <= std::max(abs_tol, rel_tol * std::abs(value)) * 1.0000001;
    return result;
}

double ks_statistic(std::span<const double> values, const std::function<double(double)>& cdf) {
    if (values.empty()) throw InsufficientSamples("ks_statistic: no values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double m = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        double f = cdf(sorted[i]);
        d = std::max(d, std::max(f - static_cast<double>(i) / m, static_cast<double>(i + 1) / m - f));
    }
    return d;
}

MeanSe mean_and_se(std::span<const double> values) {
    if (values.empty()) throw InsufficientSamples("mean_and_se: no values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (values.size() < 2) return {mean, INFINITY};
    return {mean, std::sqrt(sample_variance(values) / static_cast<double>(values.size()))};
}

double sample_variance(std::span<const double> values) {
    if (values.size() < 2) throw InsufficientSamples("sample_variance: need two values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(values.size() - 1);
}

} // namespace selectrand
