#include "selectrand/experiments.hpp"
#include "selectrand/cv_gibbs.hpp"
#include "selectrand/gaussian_core.hpp"
#include "selectrand/noise.hpp"
#include "selectrand/numerics.hpp"
#include "selectrand/sampler.hpp"
#include "selectrand/selectors.hpp"
#include "selectrand/univariate.hpp"
#include "selectrand/weighted_gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace selectrand {

namespace {

const std::vector<std::pair<Experiment, std::string>> kExperimentNames = {
    {Experiment::consistency, "consistency"}, {Experiment::ci, "ci"},
    {Experiment::roc, "roc"},                 {Experiment::median, "median"},
    {Experiment::clt, "clt"},                 {Experiment::counterexample, "counterexample"},
    {Experiment::cv, "cv"},
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& text) {
    std::string t = trim(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
    }
    if (used != t.size() || !std::isfinite(v)) throw ConfigError("config key '" + key + "': '" + text + "' is not a finite number");
    return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

bool is_integer(double v) { return std::floor(v) == v && std::abs(v) < 1e9; }

// Short decimal label for arm names.
std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

MeanSe proportion(std::size_t hits, std::size_t total) {
    if (total == 0) return {std::nan(""), std::nan("")};
    double p = static_cast<double>(hits) / static_cast<double>(total);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(total))};
}

// Equal-width histogram normalized to a density; bins indexed in the replication column.
void add_histogram(ExperimentResult& out, const std::string& arm, const std::string& prefix,
                   const std::vector<double>& values, double lo, double hi, int bins) {
    if (values.empty() || !(hi > lo)) return;
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    double width = (hi - lo) / bins;
    for (double v : values) {
        int b = static_cast<int>(std::floor((v - lo) / width));
        if (b >= 0 && b < bins) counts[static_cast<std::size_t>(b)] += 1.0;
        else if (v == hi) counts.back() += 1.0;
    }
    for (int b = 0; b < bins; ++b) {
        out.add(b, arm, prefix + "_center", lo + (b + 0.5) * width);
        out.add(b, arm, prefix + "_density", counts[static_cast<std::size_t>(b)] / (values.size() * width));
    }
}

// log P(sqrt(n) Xbar + omega > threshold) for Xbar ~ N(mu, 1/n).
double file_drawer_log_selection(int n, double mu, const NoiseDistribution& noise, double threshold) {
    double center = std::sqrt(static_cast<double>(n)) * mu;
    if (noise.is_degenerate()) return normal_log_sf(threshold - center);
    LogWeight w = [&noise, threshold](double z) { return log_survival(noise, threshold - z); };
    return weighted_gaussian_log_mass(center, 1.0, w);
}

// ---------------------------------------------------------------------------
// consistency
// ---------------------------------------------------------------------------

ExperimentResult consistency(const ExperimentConfig& config) {
    ExperimentResult out;
    std::size_t reps = config.reps_or(10000);
    auto ns = config.list("grid", {100, 250});
    double mu = config.number("mu", -1.0);
    double kappa = config.number("kappa", 0.5);
    const double threshold = 2.0;
    std::uint64_t stream = 0;
    for (double nd : ns) {
        int n = static_cast<int>(nd);
        for (int randomized = 0; randomized < 2; ++randomized) {
            auto noise = randomized ? NoiseDistribution::logistic(kappa) : NoiseDistribution::degenerate();
            std::string arm = std::string(randomized ? "randomized" : "nonrandomized") + ":n=" + label(n);
            FileDrawerConfig fc{n, threshold, noise, GaussianPopulation{mu}};
            auto run = sample_selected(fc, reps, derive_seed(config.seed, stream++));
            auto means = run.selected_means();
            for (std::size_t i = 0; i < means.size(); ++i) out.add(static_cast<long>(i), arm, "xbar", means[i]);
            auto ms = mean_and_se(means);
            out.summary(arm, "mean_xbar", ms.mean);
            out.summary(arm, "mean_xbar_se", ms.se);
            out.summary(arm, "bias", ms.mean - mu);
            out.summary(arm, "min_xbar", *std::min_element(means.begin(), means.end()));
            out.summary(arm, "max_xbar", *std::max_element(means.begin(), means.end()));
            out.summary(arm, "accepted", static_cast<double>(means.size()));
            double log_rate = file_drawer_log_selection(n, mu, noise, threshold);
            out.summary(arm, "log10_selection_probability", log_rate / std::log(10.0));
            out.acceptance_rates.emplace_back(arm, std::exp(log_rate));
            double lo = *std::min_element(means.begin(), means.end());
            double hi = *std::max_element(means.begin(), means.end());
            add_histogram(out, arm, "hist", means, lo, hi, 40);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// ci
// ---------------------------------------------------------------------------

ExperimentResult confidence_intervals(const ExperimentConfig& config) {
    ExperimentResult out;
    std::size_t reps = config.reps_or(10000);
    int n = config.integer("n", 100);
    double kappa = config.number("kappa", 0.5);
    double gamma = config.number("gamma", 1.0);
    double mu = config.number("mu", 0.0);
    double level = config.number("level", 0.9);
    std::vector<double> grid;
    for (int k = 0; k <= 60; ++k) grid.push_back(-1.5 + 0.05 * k);
    grid = config.list("grid", grid);
    const double threshold = 2.0;

    std::uint64_t stream = 0;
    for (auto noise : {NoiseDistribution::gaussian(gamma), NoiseDistribution::logistic(kappa)}) {
        std::string arm = noise.kind() == NoiseKind::gaussian ? "gaussian" : "logistic";
        double ratio_low = 0.0, ratio_high = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            auto sel = invert_selective_ci(grid[k], n, noise, threshold, level);
            auto nom = nominal_interval(grid[k], n, level);
            long r = static_cast<long>(k);
            out.add(r, arm, "xbar", grid[k]);
            out.add(r, arm, "lower", sel.lower);
            out.add(r, arm, "upper", sel.upper);
            out.add(r, arm, "nominal_lower", nom.lower);
            out.add(r, arm, "nominal_upper", nom.upper);
            out.add(r, arm, "length_ratio", sel.length() / nom.length());
            if (k == 0) ratio_low = sel.length() / nom.length();
            if (k + 1 == grid.size()) ratio_high = sel.length() / nom.length();
        }
        out.summary(arm, "length_ratio_lowest_xbar", ratio_low);
        out.summary(arm, "length_ratio_highest_xbar", ratio_high);
        if (noise.kind() == NoiseKind::gaussian) {
            double tau = 1.0 / (1.0 + gamma * gamma);
            out.summary(arm, "tau", tau);
            out.summary(arm, "inverse_one_minus_tau", 1.0 / (1.0 - tau));
            out.summary(arm, "inverse_sqrt_one_minus_tau", 1.0 / std::sqrt(1.0 - tau));
        }

        // Coverage of mu over accepted replications.
        std::string cov_arm = arm + ":coverage";
        FileDrawerConfig fc{n, threshold, noise, GaussianPopulation{mu}};
        auto run = sample_selected(fc, reps, derive_seed(config.seed, stream++));
        auto means = run.selected_means();
        std::vector<int> covered(means.size(), 0);
        parallel_for(means.size(), [&](std::size_t i) {
            covered[i] = invert_selective_ci(means[i], n, noise, threshold, level).contains(mu) ? 1 : 0;
        });
        std::size_t hits = 0;
        for (std::size_t i = 0; i < means.size(); ++i) {
            out.add(static_cast<long>(i), cov_arm, "covered", covered[i]);
            hits += static_cast<std::size_t>(covered[i]);
        }
        auto cov = proportion(hits, means.size());
        out.summary(cov_arm, "coverage", cov.mean);
        out.summary(cov_arm, "coverage_se", cov.se);
        out.summary(cov_arm, "level", level);
        out.summary(cov_arm, "accepted", static_cast<double>(means.size()));
        out.acceptance_rates.emplace_back(cov_arm, std::exp(file_drawer_log_selection(n, mu, noise, threshold)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// roc
// ---------------------------------------------------------------------------

struct RocSetup {
    int n = 100;
    int p = 50;
    int s = 7;
    double sigma = 1.0;
    double lam = 0.0;
    double alpha = 0.05;
    std::vector<double> gammas;
    std::vector<double> fractions;
    ChainConfig chain{200, 2, 1000, 0};
};

struct RocTally {
    std::size_t reps = 0;
    std::size_t screened = 0;
    std::size_t failed = 0;          // screened but the chain could not start
    std::vector<double> type2;       // per screened replication: fraction not rejected
};

bool covers_support(const IndexSet& active, int s) {
    for (Index j = 0; j < s; ++j)
        if (std::find(active.begin(), active.end(), j) == active.end()) return false;
    return true;
}

Vector contrast_vector(const Matrix& X, const IndexSet& E, Index position) {
    Matrix XE = select_cols(X, E);
    Matrix G = XE.transpose() * XE;
    Vector e = Vector::Unit(static_cast<Index>(E.size()), position);
    return XE * G.ldlt().solve(e);
}

Matrix nuisance_rows(const Matrix& X, const IndexSet& E, Index position) {
    IndexSet N;
    for (std::size_t a = 0; a < E.size(); ++a)
        if (static_cast<Index>(a) != position) N.push_back(E[a]);
    if (N.empty()) return Matrix(0, X.rows());
    return select_cols(X, N).transpose();
}

// Fraction of true signals not rejected, by sampling eta'y under beta_j = 0
// given X_{E\j}'y and the selection event.
double selective_type2(const Matrix& X, const Vector& y, const IndexSet& E, const AffineSelectionEvent& event,
                       double gamma, const Vector& omega, const RocSetup& setup, std::uint64_t seed) {
    Index n = X.rows();
    int misses = 0;
    for (Index j = 0; j < setup.s; ++j) {
        Index pos = std::find(E.begin(), E.end(), j) - E.begin();
        ConstrainedLaw law;
        law.mean = Vector::Zero(n);
        law.cov = setup.sigma * setup.sigma * Matrix::Identity(n, n);
        law.event = event;
        Vector init = y;
        if (gamma > 0.0) {
            law.noise = NoiseDistribution::gaussian(gamma);
            law.event.B = event.A;
            init.resize(2 * n);
            init << y, omega;
        } else {
            law.event.B = Matrix(event.A.rows(), 0);
        }
        law.fixed = nuisance_rows(X, E, pos);
        Vector eta = contrast_vector(X, E, pos);
        ChainConfig cfg = setup.chain;
        cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(j));
        auto chain = hit_and_run(law, init, cfg);
        double p = mc_pvalue(chain.contrast(eta), eta.dot(y), Alternative::two_sided);
        if (p > setup.alpha) ++misses;
    }
    return static_cast<double>(misses) / setup.s;
}

double splitting_type2(const Matrix& X, const Vector& y, const IndexSet& E, const IndexSet& held_out,
                       const RocSetup& setup) {
    if (held_out.size() <= E.size()) return 1.0;
    Matrix XH = select_cols(select_rows(X, held_out), E);
    Vector yH = select_rows(y, held_out);
    Matrix G = XH.transpose() * XH;
    Eigen::LDLT<Matrix> ldlt(G);
    Vector b = ldlt.solve(XH.transpose() * yH);
    Matrix Ginv = ldlt.solve(Matrix::Identity(G.rows(), G.cols()));
    int misses = 0;
    for (Index j = 0; j < setup.s; ++j) {
        Index pos = std::find(E.begin(), E.end(), j) - E.begin();
        double z = b(pos) / (setup.sigma * std::sqrt(Ginv(pos, pos)));
        double p = 2.0 * normal_sf(std::abs(z));
        if (p > setup.alpha) ++misses;
    }
    return static_cast<double>(misses) / setup.s;
}

void roc_summary(ExperimentResult& out, const std::string& arm, const RocTally& t) {
    auto sc = proportion(t.screened, t.reps);
    out.summary(arm, "screening", sc.mean);
    out.summary(arm, "screening_se", sc.se);
    out.summary(arm, "screened", static_cast<double>(t.screened));
    out.summary(arm, "chain_failures", static_cast<double>(t.failed));
    if (t.type2.size() >= 2) {
        auto ms = mean_and_se(t.type2);
        out.summary(arm, "type2", ms.mean);
        out.summary(arm, "type2_se", ms.se);
    } else {
        out.summary(arm, "type2", std::nan(""));
        out.summary(arm, "type2_se", std::nan(""));
    }
    out.acceptance_rates.emplace_back(arm, sc.mean);
}

ExperimentResult roc(const ExperimentConfig& config) {
    ExperimentResult out;
    RocSetup setup;
    std::size_t reps = config.reps_or(400);
    double magnitude = 0.7 * setup.sigma * std::sqrt(2.0 * std::log(setup.p) / setup.n);
    setup.lam = config.number("lam", setup.sigma * std::sqrt(static_cast<double>(setup.n)));
    setup.gammas = config.list("grid", {0.0, 0.25, 0.5, 1.0, 2.0});
    setup.fractions = {0.9, 0.8, 0.7, 0.6, 0.5};
    std::sort(setup.gammas.begin(), setup.gammas.end());

    Vector beta = Vector::Zero(setup.p);
    beta.head(setup.s).setConstant(magnitude);

    std::size_t G = setup.gammas.size(), F = setup.fractions.size();
    // Per replication: additive arms, carving arms, splitting arms.
    struct RepOutcome {
        std::vector<int> screened;
        std::vector<int> failed;
        std::vector<double> type2;
    };
    std::vector<RepOutcome> outcomes(reps);
    parallel_for(reps, [&](std::size_t r) {
        std::uint64_t rs = derive_seed(config.seed, r);
        Rng rng(rs);
        Matrix X(setup.n, setup.p);
        for (Index j = 0; j < setup.p; ++j)
            for (Index i = 0; i < setup.n; ++i) X(i, j) = standard_normal(rng);
        Vector y = X * beta + setup.sigma * standard_normal_vector(rng, setup.n);
        Vector omega0 = standard_normal_vector(rng, setup.n);
        IndexSet perm(static_cast<std::size_t>(setup.n));
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);

        RepOutcome& o = outcomes[r];
        std::size_t arms = G + 2 * F;
        o.screened.assign(arms, 0);
        o.failed.assign(arms, 0);
        o.type2.assign(arms, std::nan(""));
        for (std::size_t a = 0; a < G; ++a) {
            double gamma = setup.gammas[a];
            Vector omega = gamma * omega0;
            auto fit = solve_lasso(X, y + omega, setup.lam);
            if (!covers_support(fit.active, setup.s)) continue;
            o.screened[a] = 1;
            auto event = lasso_affine_region(X, fit.active, fit.signs, setup.lam);
            try {
                o.type2[a] = selective_type2(X, y, fit.active, event, gamma, omega, setup, derive_seed(rs, 100 + a));
            } catch (const Infeasible&) {
                o.failed[a] = 1;
            }
        }
        for (std::size_t f = 0; f < F; ++f) {
            auto m = static_cast<std::size_t>(std::lround(setup.fractions[f] * setup.n));
            IndexSet rows(perm.begin(), perm.begin() + static_cast<long>(m));
            IndexSet held(perm.begin() + static_cast<long>(m), perm.end());
            std::sort(rows.begin(), rows.end());
            std::sort(held.begin(), held.end());
            auto split = split_select(X, y, rows, setup.fractions[f] * setup.lam);
            if (!covers_support(split.fit.active, setup.s)) continue;
            std::size_t carve = G + f, hold = G + F + f;
            o.screened[carve] = o.screened[hold] = 1;
            try {
                o.type2[carve] = selective_type2(X, y, split.fit.active, split.event, 0.0, Vector(), setup,
                                                 derive_seed(rs, 200 + f));
            } catch (const Infeasible&) {
                o.failed[carve] = 1;
            }
            o.type2[hold] = splitting_type2(X, y, split.fit.active, held, setup);
        }
    });

    auto tally = [&](std::size_t arm_index) {
        RocTally t;
        t.reps = reps;
        for (const auto& o : outcomes) {
            t.screened += static_cast<std::size_t>(o.screened[arm_index]);
            t.failed += static_cast<std::size_t>(o.failed[arm_index]);
            if (o.screened[arm_index] && !o.failed[arm_index]) t.type2.push_back(o.type2[arm_index]);
        }
        return t;
    };
    auto emit_reps = [&](const std::string& arm, std::size_t arm_index) {
        for (std::size_t r = 0; r < reps; ++r) {
            out.add(static_cast<long>(r), arm, "screened", outcomes[r].screened[arm_index]);
            if (outcomes[r].screened[arm_index] && !outcomes[r].failed[arm_index])
                out.add(static_cast<long>(r), arm, "type2", outcomes[r].type2[arm_index]);
        }
    };

    struct Point {
        double screening, type2, se;
    };
    std::vector<Point> additive;
    for (std::size_t a = 0; a < G; ++a) {
        std::string arm = "additive:gamma=" + label(setup.gammas[a]);
        emit_reps(arm, a);
        auto t = tally(a);
        roc_summary(out, arm, t);
        if (t.type2.size() >= 2) {
            auto ms = mean_and_se(t.type2);
            additive.push_back({proportion(t.screened, t.reps).mean, ms.mean, ms.se});
        }
    }
    // Zero randomization is the full-data carving point.
    if (!setup.gammas.empty() && setup.gammas.front() == 0.0) {
        auto t = tally(0);
        roc_summary(out, "carving:fraction=1", t);
    }
    std::sort(additive.begin(), additive.end(), [](const Point& a, const Point& b) { return a.screening < b.screening; });
    for (std::size_t f = 0; f < F; ++f) {
        std::string carve = "carving:fraction=" + label(setup.fractions[f]);
        std::string hold = "splitting:fraction=" + label(setup.fractions[f]);
        emit_reps(carve, G + f);
        emit_reps(hold, G + F + f);
        auto tc = tally(G + f);
        roc_summary(out, carve, tc);
        roc_summary(out, hold, tally(G + F + f));
        // Additive Type-II interpolated at the carving screening probability.
        double s = proportion(tc.screened, tc.reps).mean;
        double matched = std::nan(""), matched_se = std::nan("");
        for (std::size_t k = 0; k + 1 < additive.size(); ++k) {
            const Point &a = additive[k], &b = additive[k + 1];
            if (s < a.screening || s > b.screening) continue;
            double w = b.screening > a.screening ? (s - a.screening) / (b.screening - a.screening) : 0.0;
            matched = (1.0 - w) * a.type2 + w * b.type2;
            matched_se = std::hypot((1.0 - w) * a.se, w * b.se);
            break;
        }
        out.summary(carve, "additive_type2_matched", matched);
        out.summary(carve, "additive_type2_matched_se", matched_se);
    }
    out.summary("design", "n", setup.n);
    out.summary("design", "p", setup.p);
    out.summary("design", "nonzero", setup.s);
    out.summary("design", "magnitude", magnitude);
    out.summary("design", "lam", setup.lam);
    out.summary("design", "alpha", setup.alpha);
    return out;
}

// ---------------------------------------------------------------------------
// median
// ---------------------------------------------------------------------------

// N(0,1) + 0.5 Exp(1): cdf Phi(x) - e^{2 - 2x} Phi(x - 2), density 2 e^{2 - 2x} Phi(x - 2).
double exgauss_cdf(double x) { return normal_cdf(x) - std::exp(2.0 - 2.0 * x + normal_log_cdf(x - 2.0)); }
double exgauss_pdf(double x) { return 2.0 * std::exp(2.0 - 2.0 * x + normal_log_cdf(x - 2.0)); }

double exgauss_median() {
    double lo = -2.0, hi = 3.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (exgauss_cdf(mid) < 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ExperimentResult median_study(const ExperimentConfig& config) {
    ExperimentResult out;
    std::size_t reps = config.reps_or(5000);
    auto ns = config.list("grid", {50, 500});
    double kappa = config.number("kappa", 0.8);
    double shift = config.number("mu", 1.0);
    auto noise = NoiseDistribution::logistic(kappa);
    double m0 = exgauss_median();
    double f0 = exgauss_pdf(m0);
    double sigma = 1.0 / (2.0 * f0);  // sd of sqrt(n) times the sample median
    std::uint64_t stream = 0;
    for (double nd : ns) {
        int n = static_cast<int>(nd);
        double rn = std::sqrt(static_cast<double>(n));
        for (int alt = 0; alt < 2; ++alt) {
            std::string arm = std::string(alt ? "alternative" : "null") + ":n=" + label(n);
            std::uint64_t base = derive_seed(config.seed, stream++);
            std::vector<double> pivots(reps), selected(reps), unselected(reps);
            std::vector<int> first(reps);
            parallel_for(reps, [&](std::size_t r) {
                Rng rng(derive_seed(base, r));
                std::exponential_distribution<double> expo(1.0);
                std::vector<double> g1(static_cast<std::size_t>(n)), g2(static_cast<std::size_t>(n));
                for (auto& v : g1) v = standard_normal(rng) + 0.5 * expo(rng) - m0 + (alt ? shift / rn : 0.0);
                for (auto& v : g2) v = standard_normal(rng) + 0.5 * expo(rng) - m0;
                double omega = draw(noise, rng);
                auto med = [](std::vector<double> v) {
                    auto mid = v.begin() + static_cast<long>(v.size() / 2);
                    std::nth_element(v.begin(), mid, v.end());
                    double hi = *mid;
                    if (v.size() % 2 == 1) return hi;
                    return 0.5 * (hi + *std::max_element(v.begin(), mid));
                };
                double t1 = med(g1), t2 = med(g2);
                bool pick1 = t1 > t2 + omega / rn;
                first[r] = pick1 ? 1 : 0;
                pivots[r] = pick1 ? best_median_pivot(g1, g2, omega, noise, 0.0)
                                  : best_median_pivot(g2, g1, -omega, noise, 0.0);
                selected[r] = rn * (pick1 ? t1 : t2);
                unselected[r] = rn * t1;
            });
            for (std::size_t r = 0; r < reps; ++r) {
                out.add(static_cast<long>(r), arm, "pivot", pivots[r]);
                out.add(static_cast<long>(r), arm, "selected_group", first[r] ? 1.0 : 2.0);
                out.add(static_cast<long>(r), arm, "scaled_selected_median", selected[r]);
            }
            auto ms = mean_and_se(pivots);
            out.summary(arm, "ks", ks_uniform_statistic(pivots));
            out.summary(arm, "ks_critical", ks_critical_95(reps));
            out.summary(arm, "mean_pivot", ms.mean);
            out.summary(arm, "mean_pivot_se", ms.se);
            double share = std::accumulate(first.begin(), first.end(), 0.0) / static_cast<double>(reps);
            out.summary(arm, "first_group_selected", share);
            out.acceptance_rates.emplace_back(arm, share);
            if (!alt) {
                double lo = -4.0 * sigma, hi = 5.0 * sigma;
                add_histogram(out, arm, "selected", selected, lo, hi, 36);
                add_histogram(out, arm, "unselected", unselected, lo, hi, 36);
                // Limits: sqrt(n) T ~ N(0, sigma^2); selection reweights by P(omega < z1 - z2).
                for (int b = 0; b < 36; ++b) {
                    double z = lo + (b + 0.5) * (hi - lo) / 36;
                    double base_density = normal_pdf(z / sigma) / sigma;
                    auto inner = [&](double u) { return normal_pdf(u) * cdf(noise, z - sigma * u); };
                    double sel_prob = integrate(inner, -10.0, 10.0, 1e-12).value;
                    out.add(b, arm, "theory_unselected", base_density);
                    out.add(b, arm, "theory_selected", 2.0 * base_density * sel_prob);
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// clt
// ---------------------------------------------------------------------------

ExperimentResult clt(const ExperimentConfig& config) {
    ExperimentResult out;
    // The skewed cells' pivot error at n=1000 is near 1e-3; the KS noise floor must sit below it.
    std::size_t reps = config.reps_or(4000000);
    auto ns = config.list("grid", {50, 200, 1000});
    double kappa = config.number("kappa", 0.5);
    const double threshold = 2.0;
    struct Cell {
        std::string population;
        double mu;
        bool randomized;
    };
    std::vector<Cell> cells;
    for (const char* pop : {"gaussian", "shifted_bernoulli", "skewed"})
        for (double mu : {-1.0, 0.0, 0.2}) cells.push_back({pop, mu, true});
    cells.push_back({"shifted_bernoulli", -0.5, true});
    cells.push_back({"shifted_bernoulli", -0.5, false});

    std::uint64_t stream = 0;
    for (const auto& c : cells) {
        auto noise = c.randomized ? NoiseDistribution::logistic(kappa) : NoiseDistribution::degenerate();
        Population pop = c.population == "gaussian"            ? Population{GaussianPopulation{c.mu}}
                         : c.population == "shifted_bernoulli" ? Population{ShiftedBernoulliPopulation{c.mu}}
                                                               : Population{SkewedPopulation{c.mu}};
        std::string cell = c.population + ":mu=" + label(c.mu) + ":noise=" + (c.randomized ? "logistic" : "none");
        for (double nd : ns) {
            int n = static_cast<int>(nd);
            std::string arm = cell + ":n=" + label(n);
            FileDrawerConfig fc{n, threshold, noise, pop};
            auto run = sample_selected(fc, reps, derive_seed(config.seed, stream++));
            auto means = run.selected_means();
            std::vector<double> pivots(means.size());
            if (c.randomized) {
                FileDrawerPivot pivot(n, c.mu, noise, threshold);
                for (std::size_t i = 0; i < means.size(); ++i) pivots[i] = pivot(means[i]);
            } else {
                for (std::size_t i = 0; i < means.size(); ++i)
                    pivots[i] = nonrandomized_pivot(means[i], n, c.mu, threshold);
            }
            out.summary(arm, "ks", ks_uniform_statistic(pivots));
            out.summary(arm, "ks_critical", ks_critical_95(pivots.size()));
            out.summary(arm, "accepted", static_cast<double>(pivots.size()));
            out.acceptance_rates.emplace_back(arm + ":sampler", run.acceptance_rate());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// counterexample
// ---------------------------------------------------------------------------

ExperimentResult counterexample(const ExperimentConfig& config) {
    ExperimentResult out;
    std::size_t reps = config.reps_or(100000);
    auto ns = config.list("grid", {100, 1000, 10000});
    const double threshold = 2.0, mu = -0.5;
    const std::vector<double> ts = {0.5, 1.0, 2.0};
    std::uint64_t stream = 0;
    for (double nd : ns) {
        int n = static_cast<int>(nd);
        double rn = std::sqrt(static_cast<double>(n));
        double bn = 0.5 * rn + threshold;
        std::string arm = "n=" + label(n);
        FileDrawerConfig fc{n, threshold, NoiseDistribution::degenerate(), ShiftedBernoulliPopulation{mu}};
        auto run = sample_selected(fc, reps, derive_seed(config.seed, stream++));
        auto means = run.selected_means();
        std::vector<double> overshoot(means.size()), pivots(means.size());
        for (std::size_t i = 0; i < means.size(); ++i) {
            double z = rn * (means[i] - mu);
            overshoot[i] = bn * (z - bn);
            pivots[i] = nonrandomized_pivot(means[i], n, mu, threshold);
        }
        for (double t : ts) {
            std::size_t above = 0;
            for (double o : overshoot) above += o > t;
            auto s = proportion(above, overshoot.size());
            std::string key = ":t=" + label(t);
            out.summary(arm, "survival" + key, s.mean);
            out.summary(arm, "survival_se" + key, s.se);
            out.summary(arm, "exp_reference" + key, std::exp(-t));
            out.summary(arm, "log3_reference" + key, std::pow(3.0, -t));
        }
        auto ms = mean_and_se(overshoot);
        out.summary(arm, "mean_overshoot", ms.mean);
        out.summary(arm, "pivot_ks", ks_uniform_statistic(pivots));
        out.summary(arm, "ks_critical", ks_critical_95(pivots.size()));
        out.summary(arm, "accepted", static_cast<double>(means.size()));
        out.acceptance_rates.emplace_back(arm + ":sampler", run.acceptance_rate());
    }
    return out;
}

// ---------------------------------------------------------------------------
// cv
// ---------------------------------------------------------------------------

ExperimentResult cv_study(const ExperimentConfig& config) {
    ExperimentResult out;
    std::size_t reps = config.reps_or(500);
    CvPipelineSetup setup;
    setup.n = config.integer("n", 100);
    if (config.has("grid")) {
        auto g = config.list("grid", {});
        setup.grid = Eigen::Map<const Vector>(g.data(), static_cast<Index>(g.size()));
    }
    std::vector<CvPipelineResult> results(reps);
    parallel_for(reps, [&](std::size_t r) { results[r] = cv_null_pvalue(setup, derive_seed(config.seed, r)); });
    std::string arm = "cv:n=" + label(setup.n) + ":p=" + label(setup.p);
    std::vector<double> pv(reps);
    std::size_t updates = 0, attempts = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto& res = results[r];
        pv[r] = res.pvalue;
        long rr = static_cast<long>(r);
        out.add(rr, arm, "pvalue", res.pvalue);
        out.add(rr, arm, "lambda_hat", res.lambda_hat);
        out.add(rr, arm, "active_size", static_cast<double>(res.active.size()));
        out.add(rr, arm, "target", static_cast<double>(res.target));
        out.add(rr, arm, "cv_acceptance", res.chain.cv_acceptance_rate());
        out.add(rr, arm, "datasets", static_cast<double>(res.datasets));
        updates += res.chain.cv_updates;
        attempts += res.chain.cv_attempts;
    }
    out.summary(arm, "ks", ks_uniform_statistic(pv));
    out.summary(arm, "ks_critical", ks_critical_95(reps));
    std::size_t rejections = 0;
    for (double p : pv) rejections += p <= 0.05;
    auto rate = proportion(rejections, reps);
    out.summary(arm, "rejection_rate_0.05", rate.mean);
    out.summary(arm, "rejection_rate_0.05_se", rate.se);
    double acc = attempts == 0 ? 0.0 : static_cast<double>(updates) / static_cast<double>(attempts);
    out.summary(arm, "cv_acceptance", acc);
    out.acceptance_rates.emplace_back(arm + ":y_cv", acc);
    return out;
}

const std::map<Experiment, std::set<std::string>>& allowed_keys() {
    static const std::map<Experiment, std::set<std::string>> keys = {
        {Experiment::consistency, {"grid", "mu", "kappa"}},
        {Experiment::ci, {"n", "kappa", "gamma", "mu", "level", "grid"}},
        {Experiment::roc, {"lam", "grid"}},
        {Experiment::median, {"kappa", "mu", "grid"}},
        {Experiment::clt, {"kappa", "grid"}},
        {Experiment::counterexample, {"grid"}},
        {Experiment::cv, {"n", "grid"}},
    };
    return keys;
}

} // namespace

Experiment parse_experiment(const std::string& name) {
    for (const auto& [e, s] : kExperimentNames)
        if (s == name) return e;
    throw ConfigError("unknown experiment '" + name + "'");
}

std::string experiment_name(Experiment experiment) {
    for (const auto& [e, s] : kExperimentNames)
        if (e == experiment) return s;
    throw InvalidInput("experiment_name: unknown experiment");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, Experiment experiment, std::uint64_t seed) {
    ExperimentConfig config;
    config.experiment = experiment;
    config.seed = seed;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++number;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(number) + ": empty key or value");
        if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");
        if (key == "experiment") {
            if (parse_experiment(value) != experiment)
                throw ConfigError("config names experiment '" + value + "' but '" + experiment_name(experiment) +
                                  "' was requested");
        } else if (key == "seed") {
            double v = parse_number(key, value);
            if (v < 0 || !is_integer(v)) throw ConfigError("config key 'seed' must be a non-negative integer");
            // The command line seed takes precedence; keep the file value only as documentation.
        } else if (key == "reps") {
            double v = parse_number(key, value);
            if (v < 1 || !is_integer(v)) throw ConfigError("config key 'reps' must be a positive integer");
            config.reps = static_cast<std::size_t>(v);
        } else {
            config.overrides[key] = value;
        }
    }
    config.validate();
    return config;
}

void ExperimentConfig::validate() const {
    const auto& allowed = allowed_keys().at(experiment);
    for (const auto& [key, value] : overrides) {
        if (!allowed.count(key))
            throw ConfigError("config key '" + key + "' is not used by experiment '" + experiment_name(experiment) + "'");
        if (key == "grid") {
            auto g = parse_list(key, value);
            for (double v : g) {
                switch (experiment) {
                case Experiment::consistency:
                case Experiment::clt:
                case Experiment::counterexample:
                case Experiment::median:
                    if (!is_integer(v) || v < 2) throw ConfigError("grid entries must be sample sizes >= 2");
                    break;
                case Experiment::roc:
                    if (v < 0) throw ConfigError("roc grid entries are noise sds >= 0");
                    break;
                case Experiment::cv:
                    if (!(v > 0)) throw ConfigError("cv grid entries are penalties > 0");
                    break;
                case Experiment::ci:
                    break;
                }
            }
            continue;
        }
        double v = parse_number(key, value);
        if (key == "n" && (!is_integer(v) || v < (experiment == Experiment::cv ? 10 : 2)))
            throw ConfigError("config key 'n' must be an integer sample size");
        if ((key == "kappa" || key == "gamma" || key == "lam") && !(v > 0))
            throw ConfigError("config key '" + key + "' must be positive");
        if (key == "level" && !(v > 0 && v < 1)) throw ConfigError("config key 'level' must lie in (0, 1)");
    }
}

double ExperimentConfig::number(const std::string& key, double fallback) const {
    auto it = overrides.find(key);
    return it == overrides.end() ? fallback : parse_number(key, it->second);
}

int ExperimentConfig::integer(const std::string& key, int fallback) const {
    double v = number(key, fallback);
    if (!is_integer(v)) throw ConfigError("config key '" + key + "' must be an integer");
    return static_cast<int>(v);
}

std::vector<double> ExperimentConfig::list(const std::string& key, const std::vector<double>& fallback) const {
    auto it = overrides.find(key);
    return it == overrides.end() ? fallback : parse_list(key, it->second);
}

double ExperimentResult::value(const std::string& arm, const std::string& metric) const {
    for (const auto& r : rows)
        if (r.replication == -1 && r.arm == arm && r.metric == metric) return r.value;
    throw InvalidInput("no summary value for " + arm + " / " + metric);
}

std::vector<double> ExperimentResult::values(const std::string& arm, const std::string& metric) const {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.replication >= 0 && r.arm == arm && r.metric == metric) out.push_back(r.value);
    return out;
}

ExperimentResult run_consistency(const ExperimentConfig& config) {
    auto r = consistency(config);
    r.experiment = Experiment::consistency;
    return r;
}
ExperimentResult run_ci(const ExperimentConfig& config) {
    auto r = confidence_intervals(config);
    r.experiment = Experiment::ci;
    return r;
}
ExperimentResult run_roc(const ExperimentConfig& config) {
    auto r = roc(config);
    r.experiment = Experiment::roc;
    return r;
}
ExperimentResult run_median(const ExperimentConfig& config) {
    auto r = median_study(config);
    r.experiment = Experiment::median;
    return r;
}
ExperimentResult run_clt(const ExperimentConfig& config) {
    auto r = clt(config);
    r.experiment = Experiment::clt;
    return r;
}
ExperimentResult run_counterexample(const ExperimentConfig& config) {
    auto r = counterexample(config);
    r.experiment = Experiment::counterexample;
    return r;
}
ExperimentResult run_cv(const ExperimentConfig& config) {
    auto r = cv_study(config);
    r.experiment = Experiment::cv;
    return r;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    switch (config.experiment) {
    case Experiment::consistency: return run_consistency(config);
    case Experiment::ci: return run_ci(config);
    case Experiment::roc: return run_roc(config);
    case Experiment::median: return run_median(config);
    case Experiment::clt: return run_clt(config);
    case Experiment::counterexample: return run_counterexample(config);
    case Experiment::cv: return run_cv(config);
    }
    throw InvalidInput("run_experiment: unknown experiment");
}

} // namespace selectrand
