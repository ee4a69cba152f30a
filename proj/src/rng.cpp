// SPDX-License-Identifier: MIT
#include "wrate/rng.hpp"

#include <cmath>
#include <numbers>

namespace wrate {

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(root ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t id : path) h = mix64(h ^ mix64(id + 0x3c6ef372fe94f82bULL));
    return h;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Lemire's nearly-divisionless rejection.
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = engine_();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t Rng::poisson(double lambda) {
    if (!(lambda > 0.0)) return 0;
    return lambda < 30.0 ? poisson_inversion(lambda) : poisson_ptrs(lambda);
}

std::uint64_t Rng::poisson_inversion(double lambda) {
    const double u = uniform();
    double pmf = std::exp(-lambda);
    double cdf = pmf;
    std::uint64_t k = 0;
    while (u >= cdf) {
        ++k;
        pmf *= lambda / static_cast<double>(k);
        const double next = cdf + pmf;
        if (next == cdf) break;  // tail exhausted in double precision
        cdf = next;
    }
    return k;
}

// Hormann (1993), "The transformed rejection method for generating Poisson
// random variables", algorithm PTRS.
std::uint64_t Rng::poisson_ptrs(double lambda) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = uniform() - 0.5;
        const double v = uniform();
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b);
        const double rhs = -lambda + k * loglam - std::lgamma(k + 1.0);
        if (lhs <= rhs) return static_cast<std::uint64_t>(k);
    }
}

std::uint64_t Rng::binomial(std::uint64_t n, double prob) {
    if (n == 0 || prob <= 0.0) return 0;
    if (prob >= 1.0) return n;
    if (prob > 0.5) return n - binomial(n, 1.0 - prob);
    const double q = 1.0 - prob;
    const double ratio = prob / q;
    double u = uniform();
    double pmf = std::pow(q, static_cast<double>(n));
    if (pmf < 1e-280) {
        const std::uint64_t half = n / 2;
        return binomial(half, prob) + binomial(n - half, prob);
    }
    std::uint64_t k = 0;
    while (u >= pmf) {
        u -= pmf;
        if (k == n) return n;  // round-off guard
        pmf *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
        ++k;
        if (pmf == 0.0) return k;
    }
    return k;
}

}  // namespace wrate
