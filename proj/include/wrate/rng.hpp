// SPDX-License-Identifier: MIT
//
// Seeded random source with portable, bit-reproducible variates.
//
// std::mt19937_64 is fully specified by the standard, but the std::*_distribution
// adaptors are not, so every variate used by the library is derived here from
// raw engine output.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace wrate {

/// splitmix64 finalizer; used for deterministic seed derivation.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a root seed and a path of stream
/// identifiers (e.g. {experiment_tag, row, rep}).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t root,
                                        std::initializer_list<std::uint64_t> path) noexcept;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_pos() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal (Marsaglia polar method, one cached spare).
    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double prob) { return uniform() < prob; }

    /// Poisson(lambda): inversion below 30, PTRS transformed rejection above.
    std::uint64_t poisson(double lambda);

    /// Binomial(n, prob) by sequential inversion; O(n * min(prob, 1 - prob)) expected.
    std::uint64_t binomial(std::uint64_t n, double prob);

private:
    std::uint64_t poisson_inversion(double lambda);
    std::uint64_t poisson_ptrs(double lambda);

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace wrate
