#pragma once

#include "selectrand/common.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace selectrand {

enum class Experiment { consistency, ci, roc, median, clt, counterexample, cv };

Experiment parse_experiment(const std::string& name);
std::string experiment_name(Experiment experiment);

/// Malformed or out-of-range configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Flat key=value settings. `reps` is shared by every experiment; the other
/// keys are per-experiment overrides checked by validate().
struct ExperimentConfig {
    Experiment experiment = Experiment::consistency;
    std::uint64_t seed = 0;
    std::size_t reps = 0;  // 0: the experiment's default
    std::map<std::string, std::string> overrides;

    /// Parses `key = value` lines; '#' starts a comment, blank lines are skipped.
    static ExperimentConfig parse(const std::string& text, Experiment experiment, std::uint64_t seed);

    /// Rejects unknown keys and unparsable or out-of-range values.
    void validate() const;

    std::size_t reps_or(std::size_t fallback) const { return reps == 0 ? fallback : reps; }
    double number(const std::string& key, double fallback) const;
    int integer(const std::string& key, int fallback) const;
    /// Comma-separated list of numbers.
    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;
    bool has(const std::string& key) const { return overrides.count(key) != 0; }
};

/// One CSV row. Summary rows use replication -1; binned metrics store the
/// bin index in the replication column.
struct ResultRow {
    long replication = -1;
    std::string arm;
    std::string metric;
    double value = 0.0;
};

struct ExperimentResult {
    Experiment experiment = Experiment::consistency;
    std::vector<ResultRow> rows;
    std::vector<std::pair<std::string, double>> acceptance_rates;  // per arm

    void add(long replication, const std::string& arm, const std::string& metric, double value) {
        rows.push_back({replication, arm, metric, value});
    }
    void summary(const std::string& arm, const std::string& metric, double value) { add(-1, arm, metric, value); }

    /// The summary value for (arm, metric); throws InvalidInput when absent.
    double value(const std::string& arm, const std::string& metric) const;
    /// Every per-replication value for (arm, metric), in row order.
    std::vector<double> values(const std::string& arm, const std::string& metric) const;
};

/// Randomized vs hard-threshold file drawer at mu = -1: selected means,
/// their average and histogram per (arm, n).
ExperimentResult run_consistency(const ExperimentConfig& config);

/// Selective vs nominal intervals over a grid of observed means for gaussian
/// and logistic noise, plus a coverage study at mu.
ExperimentResult run_ci(const ExperimentConfig& config);

/// Screening probability and Type-II error of additive-noise, carving and
/// splitting arms over their randomization amounts.
ExperimentResult run_roc(const ExperimentConfig& config);

/// Two-group best-median pivots under the null and a local alternative.
ExperimentResult run_median(const ExperimentConfig& config);

/// KS statistic of the file-drawer pivot at the truth per (population, n, mu).
ExperimentResult run_clt(const ExperimentConfig& config);

/// Overshoot survival of the hard-threshold shifted Bernoulli file drawer.
ExperimentResult run_counterexample(const ExperimentConfig& config);

/// End-to-end null p-values of the cross-validated Gibbs pipeline.
ExperimentResult run_cv(const ExperimentConfig& config);

ExperimentResult run_experiment(const ExperimentConfig& config);

} // namespace selectrand
