#include "selectrand/univariate.hpp"
#include "selectrand/numerics.hpp"
#include "selectrand/weighted_gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace selectrand {

namespace {

constexpr double kSkewScale = 1.118033988749894848;  // sqrt(1.25)

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

// Strict selection with a relative guard so lattice points sitting exactly on
// the threshold are not admitted by rounding.
bool passes(double z, double omega, double threshold) {
    return z + omega - threshold > 1e-12 * (1.0 + std::abs(threshold));
}

double log_binomial_pmf_half(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0);
}

double bernoulli_mean(const ShiftedBernoulliPopulation& p, int n, int k) {
    return (p.mean - 1.0) + 2.0 * static_cast<double>(k) / static_cast<double>(n);
}

LogWeight file_drawer_weight(int n, const NoiseDistribution& noise, double threshold) {
    double rn = std::sqrt(static_cast<double>(n));
    if (noise.is_degenerate())
        return [rn, threshold](double t) { return rn * t > threshold ? 0.0 : -INFINITY; };
    return [rn, threshold, noise](double t) { return log_survival(noise, threshold - rn * t); };
}

std::vector<double> file_drawer_breaks(int n, const NoiseDistribution& noise, double threshold) {
    if (noise.kind() == NoiseKind::gaussian || noise.kind() == NoiseKind::logistic) return {};
    return {threshold / std::sqrt(static_cast<double>(n))};
}

void check_n(int n) {
    if (n < 2) throw InvalidInput("sample size must be at least 2");
}

} // namespace

double population_mean(const Population& population) {
    return std::visit(overloaded{[](const GaussianPopulation& p) { return p.mu; },
                                 [](const ShiftedBernoulliPopulation& p) { return p.mean; },
                                 [](const SkewedPopulation& p) { return p.mu; },
                                 [](const CustomPopulation& p) { return p.mean; }},
                      population);
}

std::string population_name(const Population& population) {
    return std::visit(overloaded{[](const GaussianPopulation&) { return std::string("gaussian"); },
                                 [](const ShiftedBernoulliPopulation&) { return std::string("shifted_bernoulli"); },
                                 [](const SkewedPopulation&) { return std::string("skewed"); },
                                 [](const CustomPopulation&) { return std::string("custom"); }},
                      population);
}

double draw_sample_mean(const Population& population, int n, Rng& rng) {
    check_n(n);
    double rn = std::sqrt(static_cast<double>(n));
    return std::visit(
        overloaded{
            [&](const GaussianPopulation& p) { return p.mu + standard_normal(rng) / rn; },
            [&](const ShiftedBernoulliPopulation& p) {
                std::binomial_distribution<int> binom(n, 0.5);
                return bernoulli_mean(p, n, binom(rng));
            },
            [&](const SkewedPopulation& p) {
                std::gamma_distribution<double> gamma(static_cast<double>(n), 1.0 / n);
                double z = standard_normal(rng) / rn;
                return p.mu + (z + 0.5 * (gamma(rng) - 1.0)) / kSkewScale;
            },
            [&](const CustomPopulation& p) {
                if (!p.draw) throw InvalidInput("custom population has no sampler");
                double total = 0.0;
                for (int i = 0; i < n; ++i) total += p.draw(rng);
                return total / n;
            }},
        population);
}

void FileDrawerConfig::validate() const {
    check_n(n);
    if (!std::isfinite(threshold)) throw InvalidInput("threshold must be finite");
    if (auto* c = std::get_if<CustomPopulation>(&population); c && !c->draw)
        throw InvalidInput("custom population has no sampler");
}

bool passes_selection(const ReportedMean& reported, const FileDrawerConfig& config) {
    return passes(std::sqrt(static_cast<double>(config.n)) * reported.xbar, reported.omega, config.threshold);
}

std::vector<double> FileDrawerRun::selected_means() const {
    std::vector<double> out;
    out.reserve(reported.size());
    for (const auto& r : reported) out.push_back(r.xbar);
    return out;
}

FileDrawerRun simulate_file_drawer(const FileDrawerConfig& config, std::size_t reps, std::uint64_t seed) {
    config.validate();
    if (reps < 1) throw InvalidInput("simulate_file_drawer: reps must be positive");
    double rn = std::sqrt(static_cast<double>(config.n));
    constexpr std::size_t kChunk = 4096;
    std::size_t chunks = (reps + kChunk - 1) / kChunk;
    std::vector<std::vector<ReportedMean>> kept(chunks);
    parallel_for(chunks, [&](std::size_t c) {
        std::size_t end = std::min(reps, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            Rng rng(derive_seed(seed, i));
            ReportedMean r;
            r.n = config.n;
            r.xbar = draw_sample_mean(config.population, config.n, rng);
            r.omega = draw(config.noise, rng);
            r.selected = passes(rn * r.xbar, r.omega, config.threshold);
            if (r.selected) kept[c].push_back(r);
        }
    });
    FileDrawerRun run;
    run.attempted = reps;
    for (auto& chunk : kept) run.reported.insert(run.reported.end(), chunk.begin(), chunk.end());
    run.accepted = run.reported.size();
    return run;
}

// ---------------------------------------------------------------------------
// Selective sampling. Z = sqrt(n) xbar is drawn from its law tilted by the
// selection probability Gbar(threshold - Z); omega is then drawn given
// omega > threshold - Z.
// ---------------------------------------------------------------------------

namespace {

struct Draw {
    double z = 0.0;
    std::size_t proposals = 0;
    bool ok = false;
};

using ZSampler = std::function<Draw(Rng&)>;

// Plain rejection from the unconditional law.
ZSampler plain_sampler(const FileDrawerConfig& config, std::size_t cap) {
    double rn = std::sqrt(static_cast<double>(config.n));
    return [config, cap, rn](Rng& rng) {
        Draw d;
        while (d.proposals < cap) {
            ++d.proposals;
            double z = rn * draw_sample_mean(config.population, config.n, rng);
            if (uniform_open(rng) < survival(config.noise, config.threshold - z) &&
                (!config.noise.is_degenerate() || passes(z, 0.0, config.threshold))) {
                d.z = z;
                d.ok = true;
                return d;
            }
        }
        return d;
    };
}

// Acceptance probability for a proposal tilted by e^{kappa z}, as a function
// of t = threshold - z. Bounded by one for both heavy-tailed kinds.
double tilted_acceptance(const NoiseDistribution& noise, double t) {
    double k = noise.scale();
    if (noise.kind() == NoiseKind::logistic) return survival(noise, -t);  // G(t)
    // laplace: 2 Gbar(t) e^{kappa t} is 1 for t >= 0
    if (t >= 0.0) return 1.0;
    return std::min(1.0, 2.0 * std::exp(k * t) - std::exp(2.0 * k * t));
}

ZSampler exact_sampler(const FileDrawerConfig& config, std::size_t cap, double plain_rate) {
    double rn = std::sqrt(static_cast<double>(config.n));
    const auto& noise = config.noise;
    double c = config.threshold;

    if (auto* bern = std::get_if<ShiftedBernoulliPopulation>(&config.population)) {
        int n = config.n;
        std::vector<double> logw(n + 1);
        std::vector<double> zs(n + 1);
        double peak = -INFINITY;
        for (int k = 0; k <= n; ++k) {
            zs[k] = rn * bernoulli_mean(*bern, n, k);
            double sel = noise.is_degenerate() ? (passes(zs[k], 0.0, c) ? 0.0 : -INFINITY)
                                               : log_survival(noise, c - zs[k]);
            logw[k] = log_binomial_pmf_half(n, k) + sel;
            peak = std::max(peak, logw[k]);
        }
        if (peak == -INFINITY) throw SelectionUnderflow("selection event is empty for this population", 0.0);
        std::vector<double> cum(n + 1);
        double acc = 0.0;
        for (int k = 0; k <= n; ++k) {
            acc += std::exp(logw[k] - peak);
            cum[k] = acc;
        }
        return [zs, cum](Rng& rng) {
            double u = uniform_open(rng) * cum.back();
            auto it = std::lower_bound(cum.begin(), cum.end(), u);
            std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
            return Draw{zs[k], 1, true};
        };
    }

    if (auto* gp = std::get_if<GaussianPopulation>(&config.population)) {
        double m = rn * gp->mu;
        switch (noise.kind()) {
        case NoiseKind::degenerate:
            return [m, c](Rng& rng) { return Draw{m + truncated_normal(rng, c - m, INFINITY), 1, true}; };
        case NoiseKind::gaussian: {
            double g2 = noise.scale() * noise.scale();
            double sd_s = std::sqrt(1.0 + g2);
            return [m, c, g2, sd_s](Rng& rng) {
                double s = m + sd_s * truncated_normal(rng, (c - m) / sd_s, INFINITY);
                double cond_mean = m + (s - m) / (1.0 + g2);
                double cond_sd = std::sqrt(g2 / (1.0 + g2));
                return Draw{cond_mean + cond_sd * standard_normal(rng), 1, true};
            };
        }
        case NoiseKind::logistic:
        case NoiseKind::laplace: {
            if (plain_rate >= 0.02) break;
            double mt = m + noise.scale();
            return [mt, c, noise, cap](Rng& rng) {
                Draw d;
                while (d.proposals < cap) {
                    ++d.proposals;
                    double z = mt + standard_normal(rng);
                    if (uniform_open(rng) < tilted_acceptance(noise, c - z)) {
                        d.z = z;
                        d.ok = true;
                        return d;
                    }
                }
                return d;
            };
        }
        }
    }

    if (auto* sp = std::get_if<SkewedPopulation>(&config.population)) {
        bool tiltable = noise.kind() == NoiseKind::logistic || noise.kind() == NoiseKind::laplace;
        double theta = noise.scale();
        double n = config.n;
        // Z = sqrt(n) mu + (N + 0.5 sqrt(n) (E - 1)) / s with E ~ Gamma(n, rate n).
        double b = 0.5 * theta * std::sqrt(n) / kSkewScale;
        if (tiltable && plain_rate < 0.02 && b < 0.5 * n) {
            double a = theta / kSkewScale;
            double rate = n - b;
            double base = std::sqrt(n) * sp->mu;
            return [=](Rng& rng) {
                std::gamma_distribution<double> gamma(n, 1.0 / rate);
                Draw d;
                while (d.proposals < cap) {
                    ++d.proposals;
                    double nz = a + standard_normal(rng);
                    double e = gamma(rng);
                    double z = base + (nz + 0.5 * std::sqrt(n) * (e - 1.0)) / kSkewScale;
                    if (uniform_open(rng) < tilted_acceptance(noise, c - z)) {
                        d.z = z;
                        d.ok = true;
                        return d;
                    }
                }
                return d;
            };
        }
    }

    return plain_sampler(config, cap);
}

// Selection probability P(Z + omega > threshold) estimated cheaply: exact for
// gaussian populations, Monte Carlo otherwise.
double plain_acceptance(const FileDrawerConfig& config, std::uint64_t seed) {
    if (auto* gp = std::get_if<GaussianPopulation>(&config.population)) {
        double rn = std::sqrt(static_cast<double>(config.n));
        return std::exp(weighted_gaussian_log_mass(gp->mu, 1.0 / rn,
                                                   file_drawer_weight(config.n, config.noise, config.threshold),
                                                   file_drawer_breaks(config.n, config.noise, config.threshold)));
    }
    Rng rng(derive_seed(seed, 0xacce55ULL));
    double rn = std::sqrt(static_cast<double>(config.n));
    constexpr int kPilot = 2000;
    double total = 0.0;
    for (int i = 0; i < kPilot; ++i) {
        double z = rn * draw_sample_mean(config.population, config.n, rng);
        total += config.noise.is_degenerate() ? (passes(z, 0.0, config.threshold) ? 1.0 : 0.0)
                                              : survival(config.noise, config.threshold - z);
    }
    return total / kPilot;
}

} // namespace

FileDrawerRun sample_selected(const FileDrawerConfig& config, std::size_t count, std::uint64_t seed,
                              std::size_t max_attempts) {
    config.validate();
    double rn = std::sqrt(static_cast<double>(config.n));
    double rate = plain_acceptance(config, seed);
    std::size_t cap = std::max<std::size_t>(1, max_attempts / std::max<std::size_t>(count, 1));
    ZSampler sampler = exact_sampler(config, cap, rate);

    std::vector<Draw> draws(count);
    std::vector<double> omegas(count, 0.0);
    parallel_for(count, [&](std::size_t i) {
        Rng rng(derive_seed(seed, i + 1));
        draws[i] = sampler(rng);
        if (draws[i].ok) {
            double lower = config.threshold - draws[i].z;
            omegas[i] = config.noise.is_degenerate() ? 0.0 : draw_above(config.noise, lower, rng);
        }
    });

    FileDrawerRun run;
    for (std::size_t i = 0; i < count; ++i) {
        run.attempted += draws[i].proposals;
        if (!draws[i].ok) continue;
        run.reported.push_back(ReportedMean{draws[i].z / rn, config.n, omegas[i], true});
    }
    run.accepted = run.reported.size();
    return run;
}

// ---------------------------------------------------------------------------
// Pivots.
// ---------------------------------------------------------------------------

double nonrandomized_pivot(double xbar, int n, double mu0, double threshold) {
    check_n(n);
    if (std::isnan(xbar) || std::isnan(mu0)) throw InvalidInput("nonrandomized_pivot: NaN input");
    double rn = std::sqrt(static_cast<double>(n));
    if (rn * xbar < threshold - 1e-12 * (1.0 + std::abs(threshold)))
        throw SelectionViolated("nonrandomized_pivot: observation did not pass the threshold");
    double z = std::max(rn * xbar, threshold);
    double num = normal_log_sf(z - rn * mu0);
    double den = normal_log_sf(threshold - rn * mu0);
    if (den == -INFINITY) throw SelectionUnderflow("nonrandomized_pivot: denominator underflow", 0.0);
    return std::clamp(std::exp(num - den), 0.0, 1.0);
}

double randomized_pivot(double xbar, int n, double mu0, const NoiseDistribution& noise, double threshold) {
    check_n(n);
    if (noise.is_degenerate()) return nonrandomized_pivot(xbar, n, mu0, threshold);
    if (std::isnan(xbar) || std::isnan(mu0)) throw InvalidInput("randomized_pivot: NaN input");
    double rn = std::sqrt(static_cast<double>(n));
    return weighted_gaussian_tail(mu0, 1.0 / rn, file_drawer_weight(n, noise, threshold), xbar,
                                  file_drawer_breaks(n, noise, threshold));
}

struct FileDrawerPivot::Impl {
    WeightedGaussianTable table;
};

FileDrawerPivot::FileDrawerPivot(int n, double mu0, const NoiseDistribution& noise, double threshold) {
    check_n(n);
    double rn = std::sqrt(static_cast<double>(n));
    impl_ = std::make_unique<Impl>(Impl{WeightedGaussianTable(mu0, 1.0 / rn, file_drawer_weight(n, noise, threshold),
                                                              file_drawer_breaks(n, noise, threshold))});
}

FileDrawerPivot::~FileDrawerPivot() = default;
FileDrawerPivot::FileDrawerPivot(FileDrawerPivot&&) noexcept = default;
FileDrawerPivot& FileDrawerPivot::operator=(FileDrawerPivot&&) noexcept = default;

double FileDrawerPivot::operator()(double xbar) const { return impl_->table.tail(xbar); }
double FileDrawerPivot::selective_mean() const { return impl_->table.mean(); }
double FileDrawerPivot::selective_variance() const { return impl_->table.variance(); }

Interval nominal_interval(double xbar, int n, double level) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidInput("level must lie in (0, 1)");
    double half = normal_quantile(0.5 * (1.0 + level)) / std::sqrt(static_cast<double>(n));
    return {xbar - half, xbar + half};
}

Interval invert_selective_ci(double xbar, int n, const NoiseDistribution& noise, double threshold,
                             double level) {
    check_n(n);
    if (!(level > 0.0 && level < 1.0)) throw InvalidInput("level must lie in (0, 1)");
    double rn = std::sqrt(static_cast<double>(n));
    if (noise.is_degenerate() && rn * xbar < threshold - 1e-12 * (1.0 + std::abs(threshold)))
        throw SelectionViolated("invert_selective_ci: observation did not pass the threshold");
    auto pivot = [&](double mu0) { return randomized_pivot(xbar, n, mu0, noise, threshold); };

    // The pivot increases in mu0; solve pivot(mu0) = target.
    auto solve = [&](double target) {
        double half = 20.0 / rn;
        double lo = xbar - half;
        double hi = xbar + half;
        double f_lo = pivot(lo);
        double f_hi = pivot(hi);
        for (int expand = 0; expand < 40 && !(f_lo <= target && target <= f_hi); ++expand) {
            if (f_lo > f_hi) throw InvariantViolation("selective pivot is not monotone in mu0 on the bracket");
            half *= 2.0;
            if (f_lo > target) {
                lo = xbar - half;
                f_lo = pivot(lo);
            }
            if (f_hi < target) {
                hi = xbar + half;
                f_hi = pivot(hi);
            }
        }
        if (!(f_lo <= target && target <= f_hi))
            throw BracketError("invert_selective_ci: could not bracket the interval endpoint");
        while (hi - lo > 1e-8) {
            double mid = 0.5 * (lo + hi);
            double f = pivot(mid);
            if (f < f_lo - 1e-9 || f > f_hi + 1e-9)
                throw InvariantViolation("selective pivot is not monotone in mu0 on the bracket");
            if (f < target) {
                lo = mid;
                f_lo = f;
            } else {
                hi = mid;
                f_hi = f;
            }
        }
        return 0.5 * (lo + hi);
    };

    double alpha = 1.0 - level;
    return {solve(0.5 * alpha), solve(1.0 - 0.5 * alpha)};
}

} // namespace selectrand
