#pragma once

#include "selectrand/common.hpp"
#include "selectrand/noise.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <variant>
#include <vector>

namespace selectrand {

// ---------------------------------------------------------------------------
// Populations for the file-drawer problem. All have unit variance.
// ---------------------------------------------------------------------------

struct GaussianPopulation {
    double mu = 0.0;
};

/// Two-point law on {mean - 1, mean + 1} with equal mass. The default mean
/// gives the {-1.5, 0.5} law of the counterexample.
struct ShiftedBernoulliPopulation {
    double mean = -0.5;
};

/// mu + (N(0,1) + 0.5 (Exp(1) - 1)) / sqrt(1.25): right skewed, mean mu.
struct SkewedPopulation {
    double mu = 0.0;
};

struct CustomPopulation {
    std::function<double(Rng&)> draw;
    double mean = 0.0;
};

using Population =
    std::variant<GaussianPopulation, ShiftedBernoulliPopulation, SkewedPopulation, CustomPopulation>;

double population_mean(const Population& population);
std::string population_name(const Population& population);

/// Mean of n i.i.d. draws from the population.
double draw_sample_mean(const Population& population, int n, Rng& rng);

struct FileDrawerConfig {
    int n = 100;
    double threshold = 2.0;
    NoiseDistribution noise = NoiseDistribution::logistic(0.5);
    Population population = GaussianPopulation{0.0};

    void validate() const;
};

/// One replication of the (randomized) file drawer: report xbar iff
/// sqrt(n) xbar + omega > threshold.
struct ReportedMean {
    double xbar = 0.0;
    int n = 0;
    double omega = 0.0;
    bool selected = false;
};

/// The selection rule applied to a recorded replication.
bool passes_selection(const ReportedMean& reported, const FileDrawerConfig& config);

struct FileDrawerRun {
    std::vector<ReportedMean> reported;  // selected replications only
    std::size_t attempted = 0;
    std::size_t accepted = 0;

    double acceptance_rate() const {
        return attempted == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempted);
    }
    std::vector<double> selected_means() const;
};

/// Plain simulation: reps datasets, one omega each. Replication i draws from a
/// seed derived from (seed, i).
FileDrawerRun simulate_file_drawer(const FileDrawerConfig& config, std::size_t reps, std::uint64_t seed);

/// Draws `count` replications from the selective law directly, which stays
/// feasible when selection has vanishing probability. Exact for every
/// population/noise pair except custom populations and skewed populations
/// under degenerate noise, which fall back to plain rejection bounded by
/// max_attempts.
FileDrawerRun sample_selected(const FileDrawerConfig& config, std::size_t count, std::uint64_t seed,
                              std::size_t max_attempts = 200'000'000);

// ---------------------------------------------------------------------------
// Pivots.
// ---------------------------------------------------------------------------

/// [1 - Phi(sqrt(n)(xbar - mu0))] / [1 - Phi(threshold - sqrt(n) mu0)].
double nonrandomized_pivot(double xbar, int n, double mu0, double threshold = 2.0);

/// P(Xbar >= xbar | sqrt(n) Xbar + omega > threshold) under Xbar ~ N(mu0, 1/n).
/// Increasing in mu0, decreasing in xbar.
double randomized_pivot(double xbar, int n, double mu0, const NoiseDistribution& noise,
                        double threshold = 2.0);

/// Tabulated randomized pivot for one (n, mu0, noise, threshold); cheap to
/// evaluate at many xbar.
class FileDrawerPivot {
public:
    FileDrawerPivot(int n, double mu0, const NoiseDistribution& noise, double threshold = 2.0);
    ~FileDrawerPivot();
    FileDrawerPivot(FileDrawerPivot&&) noexcept;
    FileDrawerPivot& operator=(FileDrawerPivot&&) noexcept;

    double operator()(double xbar) const;
    /// Mean and variance of the selective law of Xbar.
    double selective_mean() const;
    double selective_variance() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
    double length() const { return upper - lower; }
    bool contains(double x) const { return lower <= x && x <= upper; }
};

/// Selective confidence interval at confidence `level` (e.g. 0.9): all mu0
/// with (1-level)/2 <= randomized_pivot <= (1+level)/2. Endpoints by
/// bisection to 1e-8.
Interval invert_selective_ci(double xbar, int n, const NoiseDistribution& noise, double threshold,
                             double level);

/// Unadjusted interval xbar -/+ z_{(1+level)/2} / sqrt(n).
Interval nominal_interval(double xbar, int n, double level);

} // namespace selectrand
