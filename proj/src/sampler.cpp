#include "selectrand/sampler.hpp"
#include "selectrand/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace selectrand {

void ConstrainedLaw::validate() const {
    Index d = dim();
    if (d < 1) throw InvalidInput("constrained law: empty mean");
    if (cov.rows() != d || cov.cols() != d) throw InvalidInput("constrained law: covariance has the wrong shape");
    double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InvalidInput("constrained law: covariance is not symmetric");
    event.validate();
    if (event.A.cols() != d) throw InvalidInput("constrained law: event and mean disagree on dimension");
    if (fixed.rows() > 0 && fixed.cols() != d) throw InvalidInput("constrained law: fixed rows have the wrong width");
}

Matrix contrast_nuisance(const Matrix& cov, const Vector& eta) {
    Vector s = cov * eta;
    double v = eta.dot(s);
    if (!(v > 0.0)) throw DegenerateContrast("contrast has zero variance");
    return Matrix::Identity(cov.rows(), cov.cols()) - (s / v) * eta.transpose();
}

void ChainConfig::validate() const {
    if (draws < 1) throw InvalidInput("chain config: draws must be at least 1");
    if (burn_in < 0 || thin < 0) throw InvalidInput("chain config: burn_in and thin must be non-negative");
}

Vector ChainResult::contrast(const Vector& eta) const {
    if (eta.size() > samples.cols()) throw InvalidInput("contrast is longer than the chain state");
    return samples.leftCols(eta.size()) * eta;
}

namespace {

constexpr int kGrid = 512;
constexpr double kLogWindow = 36.0;

// Affine parametrization x = center + L z of the gaussian part given the
// fixed rows, z ~ N(0, I_r).
struct Whitening {
    Vector center;
    Matrix L;
};

Whitening whiten(const ConstrainedLaw& law, const Vector& x0) {
    const Matrix& S = law.cov;
    Vector center = law.mean;
    Matrix cond = S;
    if (law.fixed.rows() > 0) {
        const Matrix& F = law.fixed;
        Matrix SF = S * F.transpose();
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(F * SF);
        cod.setThreshold(1e-12);
        Matrix gain = SF * cod.pseudoInverse();
        center = law.mean + gain * (F * x0 - F * law.mean);
        cond = S - gain * SF.transpose();
        cond = 0.5 * (cond + cond.transpose());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cond);
    const Vector& vals = eig.eigenvalues();
    double top = std::max(vals.maxCoeff(), 0.0);
    std::vector<Index> keep;
    for (Index i = 0; i < vals.size(); ++i)
        if (vals(i) > 1e-12 * top && vals(i) > 0.0) keep.push_back(i);
    Whitening w;
    w.center = center;
    w.L.resize(S.rows(), static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
        w.L.col(static_cast<Index>(k)) = eig.eigenvectors().col(keep[k]) * std::sqrt(vals(keep[k]));
    return w;
}

// Mass of e^f on a cell of width h with log-linear end values fa, fb
// (ea = e^fa, eb = e^fb already computed).
double cell_mass(double fa, double fb, double ea, double eb, double h) {
    double diff = fb - fa;
    if (std::abs(diff) < 1e-8) return 0.5 * h * (ea + eb);
    return h * (eb - ea) / diff;
}

// Position inside a cell of width h drawn from the log-linear density.
double invert_cell(double a, double b, double h, double u) {
    double k = (b - a) / h;
    if (std::abs(k * h) < 1e-10) return u * h;
    // Decreasing density e^{-c s} on [0, h] has s = -log1p(-u (1 - e^{-c h})) / c.
    double c = std::abs(k);
    double s = -std::log1p(u * std::expm1(-c * h)) / c;
    s = std::clamp(s, 0.0, h);
    return k < 0 ? s : h - s;
}

// Inverse-CDF draw from exp(logf) on [lo, hi] around a feasible point 0.
double sample_on_chord(const std::function<double(double)>& logf, double lo, double hi, Rng& rng) {
    double f0 = logf(0.0);
    auto edge = [&](double limit, double sign) {
        double t = 0.0;
        double step = 1.0;
        for (int k = 0; k < 80; ++k) {
            double next = 0.0 + sign * step;
            if (sign * (next - limit) >= 0.0) return limit;
            t = next;
            if (logf(t) < f0 - kLogWindow) return t;
            step *= 2.0;
        }
        return t;
    };
    double a = std::isfinite(lo) ? std::max(lo, edge(lo, -1.0)) : edge(lo, -1.0);
    double b = std::isfinite(hi) ? std::min(hi, edge(hi, 1.0)) : edge(hi, 1.0);
    if (!(b > a)) return std::clamp(0.0, lo, hi);

    std::vector<double> f(kGrid), e(kGrid), mass(kGrid - 1);
    for (int pass = 0; pass < 2; ++pass) {
        double h = (b - a) / (kGrid - 1);
        for (int i = 0; i < kGrid; ++i) f[i] = logf(a + h * i);
        double top = *std::max_element(f.begin(), f.end());
        for (int i = 0; i < kGrid; ++i) e[i] = std::exp(f[i] - top);
        double total = 0.0;
        for (int i = 0; i + 1 < kGrid; ++i) {
            mass[i] = cell_mass(f[i], f[i + 1], e[i], e[i + 1], h);
            total += mass[i];
        }
        // Narrow the window once to the cells carrying the mass.
        if (pass == 0) {
            int first = 0, last = kGrid - 2;
            while (first < last && mass[first] < 1e-15 * total) ++first;
            while (last > first && mass[last] < 1e-15 * total) --last;
            if (last - first < kGrid / 8) {
                double na = a + h * first;
                double nb = a + h * (last + 1);
                a = na;
                b = nb;
                continue;
            }
        }
        double target = uniform_open(rng) * total;
        double acc = 0.0;
        int cell = kGrid - 2;
        for (int i = 0; i + 1 < kGrid; ++i) {
            acc += mass[i];
            if (acc >= target) {
                cell = i;
                break;
            }
        }
        double t = a + h * cell + invert_cell(f[cell], f[cell + 1], h, uniform_open(rng));
        return std::clamp(t, lo, hi);
    }
    return 0.0;
}

// log g(w) up to a constant, for the continuous noise kinds.
double noise_log_kernel(NoiseKind kind, double s, double w) {
    double a = std::abs(w);
    switch (kind) {
    case NoiseKind::gaussian: return -0.5 * (w / s) * (w / s);
    case NoiseKind::logistic: return -s * a - 2.0 * std::log1p(std::exp(-s * a));
    case NoiseKind::laplace: return -s * a;
    case NoiseKind::degenerate: break;
    }
    return 0.0;
}

Vector random_direction(Rng& rng, Index size) {
    Vector d = standard_normal_vector(rng, size);
    double norm = d.norm();
    while (!(norm > 0.0)) {
        d = standard_normal_vector(rng, size);
        norm = d.norm();
    }
    return d / norm;
}

} // namespace

ChainResult hit_and_run(const ConstrainedLaw& law, const Vector& init, const ChainConfig& config) {
    law.validate();
    config.validate();
    Index d = law.dim();
    Index q = law.noise_dim();
    if (init.size() != d + q) throw InvalidInput("hit_and_run: initial point has the wrong dimension");

    Vector x = init.head(d);
    Vector omega = init.tail(q);
    const AffineSelectionEvent& ev = law.event;
    Matrix A = ev.effective_A();
    Vector slack = ev.slack(x, omega);
    for (Index i = 0; i < slack.size(); ++i)
        if (!(slack(i) > 1e-9)) throw Infeasible("hit_and_run: initial point is not strictly inside the event");

    Whitening w = whiten(law, x);
    Index r = w.L.cols();
    // Current whitened position; x - center lies in the range of L.
    Vector z = w.L.completeOrthogonalDecomposition().solve(x - w.center);

    bool free_noise = law.noise_free();
    Index qf = free_noise ? q : 0;
    double noise_sd = free_noise ? law.noise.stddev() : 1.0;
    Vector u = free_noise ? Vector(omega / noise_sd) : Vector();
    bool all_gaussian = !free_noise || law.noise.kind() == NoiseKind::gaussian;
    if (r + qf == 0) throw InvalidInput("hit_and_run: no free coordinates");

    Matrix AL = A * w.L;
    Matrix BS = free_noise ? Matrix(ev.B * noise_sd) : Matrix(ev.rows(), 0);

    ChainResult out;
    out.samples.resize(config.draws, d + q);
    Rng rng(config.seed);
    int stride = std::max(config.thin, 1);
    long total = static_cast<long>(config.burn_in) + static_cast<long>(config.draws) * stride;
    int kept = 0;
    double tiny = 1e-14 * std::max(1.0, AL.cwiseAbs().maxCoeff() + (qf ? BS.cwiseAbs().maxCoeff() : 0.0));

    for (long step = 1; step <= total; ++step) {
        ++out.steps;
        Vector dir = random_direction(rng, r + qf);
        Vector dz = dir.head(r);
        Vector du = dir.tail(qf);
        Vector a = AL * dz;
        if (qf) a.noalias() += BS * du;
        double lo = -INFINITY, hi = INFINITY;
        for (Index i = 0; i < a.size(); ++i) {
            if (a(i) > tiny) hi = std::min(hi, slack(i) / a(i));
            else if (a(i) < -tiny) lo = std::max(lo, slack(i) / a(i));
        }
        if (!(lo < hi)) {
            ++out.rejected;
        } else {
            double t;
            if (all_gaussian) {
                double m = -(z.dot(dz) + (qf ? u.dot(du) : 0.0));
                t = m + truncated_normal(rng, lo - m, hi - m);
            } else {
                NoiseKind kind = law.noise.kind();
                double scale = law.noise.scale();
                // |z + s dz|^2 = zz + 2 s zd + s^2 (dz'dz)
                double zz = z.squaredNorm(), zd = z.dot(dz), dd = dz.squaredNorm();
                auto logf = [&](double s) {
                    double v = -0.5 * (zz + s * (2.0 * zd + s * dd));
                    for (Index k = 0; k < qf; ++k) v += noise_log_kernel(kind, scale, noise_sd * (u(k) + s * du(k)));
                    return v;
                };
                t = sample_on_chord(logf, lo, hi, rng);
            }
            z += t * dz;
            x.noalias() += w.L * (t * dz);
            if (qf) {
                u += t * du;
                omega = noise_sd * u;
            }
            slack.noalias() -= t * a;
        }
        if (step % 256 == 0) {
            x = w.center + w.L * z;
            slack = ev.slack(x, omega);
        }
        if (step > config.burn_in && (step - config.burn_in) % stride == 0 && kept < config.draws) {
            out.samples.row(kept).head(d) = x.transpose();
            out.samples.row(kept).tail(q) = omega.transpose();
            ++kept;
        }
    }
    return out;
}

ChainResult hit_and_run_chains(const ConstrainedLaw& law, const Vector& init, const ChainConfig& config,
                               std::size_t chains) {
    if (chains < 1) throw InvalidInput("hit_and_run_chains: need at least one chain");
    std::vector<ChainResult> parts(chains);
    parallel_for(chains, [&](std::size_t c) {
        ChainConfig local = config;
        local.seed = derive_seed(config.seed, c);
        parts[c] = hit_and_run(law, init, local);
    });
    ChainResult out;
    Index rows = 0;
    for (const auto& p : parts) rows += p.samples.rows();
    out.samples.resize(rows, parts.front().samples.cols());
    Index at = 0;
    for (const auto& p : parts) {
        out.samples.middleRows(at, p.samples.rows()) = p.samples;
        at += p.samples.rows();
        out.steps += p.steps;
        out.rejected += p.rejected;
    }
    return out;
}

Alternative parse_alternative(const std::string& name) {
    if (name == "greater") return Alternative::greater;
    if (name == "less") return Alternative::less;
    if (name == "two_sided" || name == "two-sided") return Alternative::two_sided;
    throw InvalidInput("unknown alternative: " + name);
}

double mc_pvalue(std::span<const double> samples, double observed, Alternative alternative) {
    if (samples.size() < 100) throw InsufficientSamples("mc_pvalue: need at least 100 draws");
    if (!std::isfinite(observed)) throw InvalidInput("mc_pvalue: observed value must be finite");
    std::size_t ge = 0, le = 0;
    for (double s : samples) {
        if (s >= observed) ++ge;
        if (s <= observed) ++le;
    }
    double m = static_cast<double>(samples.size());
    double greater = (1.0 + static_cast<double>(ge)) / (1.0 + m);
    double less = (1.0 + static_cast<double>(le)) / (1.0 + m);
    switch (alternative) {
    case Alternative::greater:
        return greater;
    case Alternative::less:
        return less;
    case Alternative::two_sided:
        return std::min(1.0, 2.0 * std::min(greater, less));
    }
    return greater;
}

double mc_pvalue(const Vector& samples, double observed, Alternative alternative) {
    return mc_pvalue(std::span<const double>(samples.data(), static_cast<std::size_t>(samples.size())), observed,
                     alternative);
}

Interval mc_interval(const LawFamily& family, const Vector& init, const Vector& eta, double level,
                     const ChainConfig& config) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidInput("mc_interval: level must lie in (0, 1)");
    if (!family) throw InvalidInput("mc_interval: empty law family");
    if (eta.size() > init.size()) throw InvalidInput("mc_interval: contrast is longer than the initial point");
    double observed = eta.dot(init.head(eta.size()));
    ConstrainedLaw base = family(observed);
    double sd = std::sqrt(eta.dot(base.cov * eta));
    if (!(sd > 0.0)) throw DegenerateContrast("mc_interval: contrast has zero variance");
    double tol = 0.01 * sd;

    // P(eta'x >= observed) under mu0; increasing in mu0.
    auto pvalue = [&](double mu0) {
        ChainResult chain = hit_and_run(family(mu0), init, config);
        return mc_pvalue(chain.contrast(eta), observed, Alternative::greater);
    };
    auto solve = [&](double target) {
        double a = observed - 5.0 * sd, b = observed + 5.0 * sd;
        double fa = pvalue(a), fb = pvalue(b);
        double width = 5.0 * sd;
        for (int k = 0; k < 30 && !(fa < target); ++k) {
            width *= 2.0;
            b = a;
            fb = fa;
            a = observed - width;
            fa = pvalue(a);
        }
        for (int k = 0; k < 30 && !(fb > target); ++k) {
            width *= 2.0;
            a = b;
            fa = fb;
            b = observed + width;
            fb = pvalue(b);
        }
        if (!(fa < target && fb > target)) throw BracketError("mc_interval: could not bracket the endpoint");
        // False position with the Illinois halving; a plain bisection step
        // whenever the bracket fails to halve.
        int side = 0;
        double last_width = b - a;
        for (int it = 0; b - a > tol && it < 200; ++it) {
            double ga = fa - target, gb = fb - target;
            double mid = a + (b - a) * (-ga) / (gb - ga);
            bool bisect = (it % 3 == 2 && b - a > 0.5 * last_width) || !(mid > a && mid < b);
            if (bisect) mid = 0.5 * (a + b);
            if (it % 3 == 2) last_width = b - a;
            // Keep the probe off the bracket ends so the width always shrinks.
            mid = std::clamp(mid, a + 0.25 * tol, b - 0.25 * tol);
            double fm = pvalue(mid);
            if (fm < target) {
                a = mid;
                fa = fm;
                if (side == -1) fb = target + 0.5 * (fb - target);
                side = -1;
            } else {
                b = mid;
                fb = fm;
                if (side == 1) fa = target + 0.5 * (fa - target);
                side = 1;
            }
        }
        return 0.5 * (a + b);
    };
    Interval out;
    out.lower = solve(0.5 * (1.0 - level));
    out.upper = solve(0.5 * (1.0 + level));
    return out;
}

} // namespace selectrand
