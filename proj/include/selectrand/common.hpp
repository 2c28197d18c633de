#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace selectrand {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using IndexSet = std::vector<Index>;

// ---------------------------------------------------------------------------
// Errors. One type per failure kind so callers (and the CLI exit-code mapping)
// can dispatch on them.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class UnsupportedOperation : public Error {
public:
    using Error::Error;
};

class SelectionViolated : public Error {
public:
    using Error::Error;
};

class InvariantViolation : public Error {
public:
    using Error::Error;
};

class DegenerateContrast : public Error {
public:
    using Error::Error;
};

class DegenerateDensity : public Error {
public:
    using Error::Error;
};

class DegenerateFit : public Error {
public:
    using Error::Error;
};

class RankError : public Error {
public:
    using Error::Error;
};

class SeparationError : public Error {
public:
    using Error::Error;
};

class InsufficientSamples : public Error {
public:
    using Error::Error;
};

class Infeasible : public Error {
public:
    using Error::Error;
};

class BracketError : public Error {
public:
    using Error::Error;
};

/// Numerical failures carry the tolerance (or gap) actually reached.
class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, double achieved)
        : Error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

class NonConvergence : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class SelectionUnderflow : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

// ---------------------------------------------------------------------------
// Random numbers. Every stochastic routine takes an explicit seed; parallel
// work derives child seeds from (seed, index) so results do not depend on
// scheduling.
// ---------------------------------------------------------------------------

/// xoshiro256** seeded through splitmix64. Cheap to construct, so every
/// replication can own one.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t x = seed;
        for (auto& w : s_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            w = z ^ (z >> 31);
        }
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        result_type result = rotl(s_[1] * 5, 7) * 9;
        result_type t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

private:
    static result_type rotl(result_type x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

/// splitmix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

/// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
    // 53 random bits, shifted off zero.
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

inline Vector standard_normal_vector(Rng& rng, Index size) {
    Vector v(size);
    for (Index i = 0; i < size; ++i) v(i) = standard_normal(rng);
    return v;
}

/// Runs body(i) for i in [0, count) across hardware threads. body must only
/// touch per-index state.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace selectrand
