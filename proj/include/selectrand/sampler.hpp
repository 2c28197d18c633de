#pragma once

#include "selectrand/common.hpp"
#include "selectrand/noise.hpp"
#include "selectrand/selectors.hpp"
#include "selectrand/univariate.hpp"

#include <cstdint>
#include <functional>
#include <span>

namespace selectrand {

/// x ~ N(mean, cov) and omega with i.i.d. coordinates from `noise`, restricted
/// to event.effective_A() x + event.B omega <= event.b. Rows of `fixed` give
/// linear functions F x held at their initial value (V_eta, or the null
/// statistic in the saturated model); everything else is a free chain
/// coordinate. omega has event.B.cols() coordinates and stays at its initial
/// value when the noise is degenerate or freeze_noise is set.
struct ConstrainedLaw {
    Vector mean;
    Matrix cov;
    NoiseDistribution noise = NoiseDistribution::degenerate();
    AffineSelectionEvent event;
    Matrix fixed;
    bool freeze_noise = false;

    Index dim() const { return mean.size(); }
    Index noise_dim() const { return event.B.cols(); }
    bool noise_free() const { return noise_dim() > 0 && !noise.is_degenerate() && !freeze_noise; }
    void validate() const;
};

/// I - (cov eta / eta'cov eta) eta': fixing these rows fixes V_eta and leaves
/// eta'x as the only free gaussian direction.
Matrix contrast_nuisance(const Matrix& cov, const Vector& eta);

struct ChainConfig {
    int burn_in = 2000;
    int thin = 5;
    int draws = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ChainResult {
    Matrix samples;  // draws x (dim + noise_dim), rows are (x, omega)
    std::size_t steps = 0;
    std::size_t rejected = 0;  // empty chords

    double rejection_rate() const {
        return steps == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(steps);
    }
    /// eta'x for every draw.
    Vector contrast(const Vector& eta) const;
};

/// Hit-and-run over the free coordinates in whitened form. Chords are exact
/// against the affine event; the 1-D target on a chord is a truncated normal
/// when every free coordinate is gaussian and is otherwise sampled by inverse
/// CDF on an adaptive 512-point grid. init = (x, omega) must satisfy every
/// row with slack above 1e-9.
ChainResult hit_and_run(const ConstrainedLaw& law, const Vector& init, const ChainConfig& config);

/// `chains` independent chains with seeds derived from config.seed, stacked in
/// chain order. Each chain keeps config.draws draws.
ChainResult hit_and_run_chains(const ConstrainedLaw& law, const Vector& init, const ChainConfig& config,
                               std::size_t chains);

enum class Alternative { greater, less, two_sided };

Alternative parse_alternative(const std::string& name);

/// Add-one smoothed tail proportion; greater: (1 + #{s >= observed}) / (1 + m).
double mc_pvalue(std::span<const double> samples, double observed, Alternative alternative);
double mc_pvalue(const Vector& samples, double observed, Alternative alternative);

using LawFamily = std::function<ConstrainedLaw(double mu0)>;

/// Inverts P_mu0(eta'x >= observed | event) over mu0, where family(mu0) is the
/// law with eta'mean = mu0. Every evaluation runs a fresh chain from init on
/// config.seed. Endpoints are bisected to 0.01 sd(eta'x).
Interval mc_interval(const LawFamily& family, const Vector& init, const Vector& eta, double level,
                     const ChainConfig& config);

} // namespace selectrand
