// SPDX-License-Identifier: MIT
//
// Hand-rolled generators and brute-force oracles shared by the test binaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "wrate/measures.hpp"
#include "wrate/rng.hpp"

namespace wrate::testing {

struct CloudShape {
    std::size_t dim = 1;
    std::size_t max_atoms = 16;
    double spread = 1.0;        // coordinates drawn in (-spread, spread]
    bool heavy = false;         // occasionally push atoms far out
    bool grid = false;          // snap to multiples of 1/64 (exact separation)
    bool uniform_weights = false;
};

inline double draw_coord(Rng& rng, const CloudShape& s) {
    double x = s.spread * (2.0 * rng.uniform() - 1.0);
    if (s.heavy && rng.uniform() < 0.2) x *= std::pow(2.0, static_cast<double>(rng.below(6) + 1));
    if (s.grid) x = std::round(x * 64.0) / 64.0;
    return x;
}

inline DiscreteMeasure random_cloud(Rng& rng, const CloudShape& s, std::size_t n = 0) {
    if (n == 0) n = 1 + rng.below(s.max_atoms);
    std::vector<double> coords(n * s.dim), weights(n);
    for (auto& c : coords) c = draw_coord(rng, s);
    for (auto& w : weights) w = s.uniform_weights ? 1.0 : 0.05 + rng.uniform();
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (auto& w : weights) w /= total;
    return DiscreteMeasure(s.dim, std::move(coords), std::move(weights));
}

// Distinct points with uniform weights (no merging happens).
inline DiscreteMeasure random_uniform_cloud(Rng& rng, std::size_t dim, std::size_t n, double spread = 1.0) {
    std::vector<double> coords(n * dim);
    for (auto& c : coords) c = spread * (2.0 * rng.uniform() - 1.0);
    return DiscreteMeasure(dim, std::move(coords), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

inline double lp_cost(std::span<const double> x, std::span<const double> y, double p) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return std::pow(std::sqrt(s), p);
}

// Minimum over all N! permutations of (1/N) sum cost.
inline double brute_force_assignment(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
    const std::size_t n = mu.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += lp_cost(mu.point(i), nu.point(perm[i]), p);
        best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(n);
}

// T_1 on the line as the integral of |F - G| between consecutive support points.
inline double cdf_gap_w1(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    std::map<double, double> jump;
    for (std::size_t i = 0; i < mu.size(); ++i) jump[mu.point(i)[0]] += mu.weight(i);
    for (std::size_t j = 0; j < nu.size(); ++j) jump[nu.point(j)[0]] -= nu.weight(j);
    double diff = 0.0, total = 0.0, prev = 0.0;
    bool first = true;
    for (const auto& [x, w] : jump) {
        if (!first) total += std::abs(diff) * (x - prev);
        diff += w;
        prev = x;
        first = false;
    }
    return total;
}

// Straight evaluation of the multiscale distance: shells by trial doubling,
// cells by explicit interval search, levels 1..depth, no tail.
class NaiveDp {
public:
    NaiveDp(std::size_t dim, double p, std::size_t depth) : dim_(dim), p_(p), depth_(depth) {}

    static int shell_of(std::span<const double> x) {
        for (int n = 0;; ++n) {
            const double r = std::ldexp(1.0, n);
            if (std::all_of(x.begin(), x.end(), [r](double c) { return -r < c && c <= r; })) return n;
        }
    }

    // Index k with x in (-1 + k h, -1 + (k + 1) h], h = 2^{1-l}.
    static long cell_of(double x, std::size_t level) {
        const double h = std::ldexp(1.0, 1 - static_cast<int>(level));
        auto k = static_cast<long>(std::floor((x + 1.0) / h));
        while (-1.0 + static_cast<double>(k + 1) * h < x) ++k;
        while (k > 0 && -1.0 + static_cast<double>(k) * h >= x) --k;
        return k;
    }

    double compact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double scale = 1.0) const {
        double mu_total = 0.0, nu_total = 0.0;
        for (auto w : mu.weights()) mu_total += w;
        for (auto w : nu.weights()) nu_total += w;
        double sum = 0.0;
        for (std::size_t l = 1; l <= depth_; ++l) {
            std::map<std::vector<long>, double> diff;
            add(diff, mu, l, scale, 1.0 / mu_total);
            add(diff, nu, l, scale, -1.0 / nu_total);
            double level = 0.0;
            for (const auto& [k, v] : diff) level += std::abs(v);
            sum += std::pow(2.0, -p_ * static_cast<double>(l)) * level;
        }
        return (std::pow(2.0, p_) - 1.0) / 2.0 * sum;
    }

    double noncompact(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const {
        int n_max = 0;
        for (std::size_t i = 0; i < mu.size(); ++i) n_max = std::max(n_max, shell_of(mu.point(i)));
        for (std::size_t i = 0; i < nu.size(); ++i) n_max = std::max(n_max, shell_of(nu.point(i)));
        double total = 0.0;
        for (int n = 0; n <= n_max; ++n) {
            const DiscreteMeasure* parts[2] = {&mu, &nu};
            std::vector<double> c[2], w[2];
            double mass[2] = {0.0, 0.0};
            for (int s = 0; s < 2; ++s) {
                for (std::size_t i = 0; i < parts[s]->size(); ++i) {
                    if (shell_of(parts[s]->point(i)) != n) continue;
                    const auto pt = parts[s]->point(i);
                    c[s].insert(c[s].end(), pt.begin(), pt.end());
                    w[s].push_back(parts[s]->weight(i));
                    mass[s] += parts[s]->weight(i);
                }
            }
            double term = std::abs(mass[0] - mass[1]);
            if (mass[0] > 0.0 && mass[1] > 0.0) {
                for (int s = 0; s < 2; ++s)
                    for (auto& v : w[s]) v /= mass[s];
                const DiscreteMeasure a(dim_, c[0], w[0]), b(dim_, c[1], w[1]);
                term += std::min(mass[0], mass[1]) * compact(a, b, std::ldexp(1.0, -n));
            }
            total += std::pow(2.0, p_ * n) * term;
        }
        return total;
    }

private:
    void add(std::map<std::vector<long>, double>& diff, const DiscreteMeasure& m, std::size_t l, double scale,
             double sign) const {
        for (std::size_t i = 0; i < m.size(); ++i) {
            std::vector<long> key(dim_);
            for (std::size_t k = 0; k < dim_; ++k) key[k] = cell_of(m.point(i)[k] * scale, l);
            diff[key] += sign * m.weight(i);
        }
    }

    std::size_t dim_;
    double p_;
    std::size_t depth_;
};

}  // namespace wrate::testing
