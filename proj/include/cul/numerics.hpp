// Deterministic numeric substrate: flat parameter vectors, the artifact-wide
// random generator, Gaussian sampling and diagonal covariance estimation.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace cul {

/// Flat vector of model parameters or image pixels.
using ParamVector = Eigen::VectorXd;

[[nodiscard]] bool all_finite(const ParamVector& v) noexcept;

/// Per-coordinate variances of a zero-mean Gaussian.
struct DiagCovariance {
    std::vector<double> variances;

    [[nodiscard]] std::size_t size() const noexcept { return variances.size(); }
    static DiagCovariance identity(std::size_t dim) { return {std::vector<double>(dim, 1.0)}; }
};

/// SplitMix64 finalizer. Used to derive independent substream seeds.
[[nodiscard]] std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Combine a base seed with stream identifiers into a new seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                        std::uint64_t c = 0) noexcept;

/// The single random generator used across the project.
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform and Gaussian variates are derived here rather than
/// through <random> distributions, whose algorithms are implementation
/// defined, so every stream is bit-reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate of a pair is cached.
    double normal();

    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t n);

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Independent zero-mean Gaussian draws, coordinate i with variance cov[i].
/// Pure in (dim, cov, seed).
[[nodiscard]] ParamVector sample_gaussian(std::size_t dim, const DiagCovariance& cov,
                                          std::uint64_t seed);

/// Unbiased per-coordinate sample variance about the sample mean.
[[nodiscard]] DiagCovariance estimate_covariance(std::span<const ParamVector> samples);

}  // namespace cul
