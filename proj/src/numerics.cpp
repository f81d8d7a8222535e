#include "cul/numerics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cul/errors.hpp"

namespace cul {

bool all_finite(const ParamVector& v) noexcept { return v.allFinite(); }

std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) noexcept {
    std::uint64_t h = mix_seed(seed);
    h = mix_seed(h ^ a);
    h = mix_seed(h ^ (b + 0x632BE59BD9B4E019ULL));
    h = mix_seed(h ^ (c + 0x85157AF5ULL));
    return h;
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // u1 in (0, 1] keeps the logarithm finite.
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(phi);
    has_cached_ = true;
    return r * std::cos(phi);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) {
        throw InvalidArgument("Rng::below: empty range");
    }
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return x % n;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = i;
    }
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(below(i));
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

ParamVector sample_gaussian(std::size_t dim, const DiagCovariance& cov, std::uint64_t seed) {
    if (dim == 0) {
        throw InvalidArgument("sample_gaussian: dimension must be positive");
    }
    if (cov.size() != dim) {
        throw InvalidArgument("sample_gaussian: covariance has " + std::to_string(cov.size()) +
                              " entries, expected " + std::to_string(dim));
    }
    for (std::size_t i = 0; i < dim; ++i) {
        if (!(cov.variances[i] >= 0.0) || !std::isfinite(cov.variances[i])) {
            throw InvalidArgument("sample_gaussian: variance " + std::to_string(i) +
                                  " is negative or non-finite");
        }
    }
    Rng rng(seed);
    ParamVector out(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        out[static_cast<Eigen::Index>(i)] = std::sqrt(cov.variances[i]) * rng.normal();
    }
    return out;
}

DiagCovariance estimate_covariance(std::span<const ParamVector> samples) {
    if (samples.size() < 2) {
        throw InvalidArgument("estimate_covariance: need at least 2 samples");
    }
    const Eigen::Index dim = samples.front().size();
    ParamVector mean = ParamVector::Zero(dim);
    for (const auto& s : samples) {
        if (s.size() != dim) {
            throw InvalidArgument("estimate_covariance: samples have unequal lengths");
        }
        mean += s;
    }
    mean /= static_cast<double>(samples.size());

    ParamVector acc = ParamVector::Zero(dim);
    for (const auto& s : samples) {
        acc += (s - mean).cwiseAbs2();
    }
    acc /= static_cast<double>(samples.size() - 1);
    return {std::vector<double>(acc.data(), acc.data() + dim)};
}

}  // namespace cul
