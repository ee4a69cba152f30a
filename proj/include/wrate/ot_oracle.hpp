// SPDX-License-Identifier: MIT
//
// Exact transport costs: quantile coupling on the line, network simplex on
// the bipartite transport polytope, Hungarian assignment for uniform
// equal-size clouds.
#pragma once

#include <cstddef>

#include "wrate/dyadic.hpp"
#include "wrate/law1d.hpp"
#include "wrate/measures.hpp"

namespace wrate {

struct CostSpec {
    enum class Mode { raw, metric };
    double p = 1.0;
    Mode mode = Mode::raw;
};

/// T_p for mode raw; W_p = T_p (p <= 1) or T_p^{1/p} (p > 1) for mode metric.
double apply_mode(double tp, const CostSpec& cost);

/// Exact cost on the line by monotone rearrangement; requires d = 1, p >= 1.
double w1d_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost);
/// Same, against a continuous law: the quantile segments of each atom are
/// integrated through the law's truncated moments (p = 1, 2) or by
/// Gauss-Legendre quadrature in the quantile variable (other p).
double w1d_exact(const DiscreteMeasure& mu, const Law1D& nu, const CostSpec& cost);

struct ExactResult {
    double value = 0.0;
    TransportPlan plan;
};

inline constexpr std::size_t kDefaultEntryCap = 1'000'000;

/// Network simplex on the n x m transport problem; any p > 0, any d.
/// Throws CapExceeded when n * m exceeds `entry_cap`.
ExactResult wexact_discrete(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost,
                            std::size_t entry_cap = kDefaultEntryCap);

/// Optimal assignment of two uniform clouds of equal size (Hungarian, O(N^3)).
double wexact_assignment(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost);

/// |x - y|^p with the Euclidean norm.
double ground_cost(std::span<const double> x, std::span<const double> y, double p);

}  // namespace wrate
