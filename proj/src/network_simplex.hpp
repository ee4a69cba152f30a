// SPDX-License-Identifier: MIT
// Primal network simplex for the uncapacitated bipartite transport problem.
#pragma once

#include <cstddef>
#include <vector>

namespace wrate::detail {

struct TransportSolution {
    std::vector<double> flow;  // n * m, row-major
    double cost = 0.0;
    std::size_t pivots = 0;
};

/// supply (n), demand (m), cost row-major n x m. Totals must agree up to rounding.
TransportSolution solve_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                                  const std::vector<double>& cost);

}  // namespace wrate::detail
