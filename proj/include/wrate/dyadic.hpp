// SPDX-License-Identifier: MIT
//
// Multiscale dyadic distance D_p, its transport-domination constant and an
// explicit coupling realizing the domination.
//
// Compact form on (-1,1]^d:
//   D_p(mu,nu) = (2^p-1)/2 * sum_{l>=1} 2^{-pl} sum_{F in P_l} |mu(F) - nu(F)|
// where P_l splits (-1,1]^d into 2^{dl} right-closed cubes of side 2^{1-l}.
// On R^d the shells B_0 = (-1,1]^d, B_n = (-2^n,2^n]^d \ (-2^{n-1},2^{n-1}]^d
// are rescaled onto the unit cube and combined as
//   sum_n 2^{pn} (|mu(B_n)-nu(B_n)| + min(mu(B_n),nu(B_n)) D_p(R_n mu, R_n nu)).
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wrate/measures.hpp"

namespace wrate {

struct PlanEntry {
    std::size_t source;
    std::size_t target;
    double mass;
};

/// Coupling between two discrete measures (atom indices refer to their
/// stored order) together with its cost sum mass * |x - y|^p.
struct TransportPlan {
    std::vector<PlanEntry> entries;
    double cost_p = 0.0;
    double p = 1.0;
};

/// sum mass |x_src - y_tgt|^p recomputed from the entries.
double plan_cost(const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);
/// Largest absolute deviation of the plan's row/column sums from the weights.
double plan_marginal_error(const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

namespace dyadic {

/// 2^{p(1+d/2)} (2^p+1)/(2^p-1).
double kappa(double p, std::size_t d);

/// 24 for d = 1, ceil(48/d) otherwise.
std::size_t default_depth(std::size_t d);
/// Deepest level representable by the 64-bit interleaved cell codes.
std::size_t max_depth(std::size_t d);

/// Shell index n with x in B_n.
int shell_index(std::span<const double> x);
/// Per-axis index at `level` of the right-closed cell containing x in (-1,1].
std::uint64_t axis_cell_index(double x, std::size_t level);
/// Splits an interleaved level-`level` cell code into per-axis indices.
std::vector<std::uint64_t> decode_cell(std::uint64_t code, std::size_t level, std::size_t dim);

struct CellMass {
    std::uint64_t code;  // interleaved, level * dim bits
    double mu;
    double nu;
};

struct LevelAccount {
    std::vector<CellMass> cells;  // occupied cells, ascending code
    double nu_elsewhere = 0.0;    // reference mass in cells holding no atom
    /// sum_F |mu(F) - nu(F)| over the whole level.
    [[nodiscard]] double l1() const;
};

struct ShellAccount {
    int shell = 0;
    double mu_mass = 0.0;  // mu(B_n)
    double nu_mass = 0.0;  // nu(B_n)
    std::vector<LevelAccount> levels;  // levels[l-1] holds P_l, raw (unnormalized) masses
    /// Every occupied cell of the last level holds a single location, so all
    /// deeper levels repeat it.
    bool separated = false;
};

struct DyadicAccount {
    std::size_t dim = 0;
    std::size_t depth = 0;
    int n_max = 0;
    std::vector<ShellAccount> shells;  // n = 0..n_max
    /// Mass of either measure beyond n_max (not tallied in `shells`).
    std::vector<double> mu_beyond, nu_beyond;  // indexed by n - n_max - 1
};

DyadicAccount build_account(const DiscreteMeasure& mu, const DiscreteMeasure& nu, std::size_t depth,
                            std::optional<int> n_max = std::nullopt);
/// `nu` must have analytic box masses; cells never occupied by mu are folded
/// into LevelAccount::nu_elsewhere.
DyadicAccount build_account(const DiscreteMeasure& mu, const ReferenceMeasure& nu, std::size_t depth,
                            std::optional<int> n_max = std::nullopt);

struct DpResult {
    double value = 0.0;
    /// Certified bound on the omitted remainder; 0 when the value is exact,
    /// +inf when no finite bound is available.
    double truncation_bound = 0.0;
};

DpResult dp_compact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, std::size_t depth);
DpResult dp_compact(const DiscreteMeasure& mu, const ReferenceMeasure& nu, double p, std::size_t depth);

DpResult dp_noncompact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, std::size_t depth,
                       std::optional<int> n_max = std::nullopt);
DpResult dp_noncompact(const DiscreteMeasure& mu, const ReferenceMeasure& nu, double p, std::size_t depth,
                       std::optional<int> n_max = std::nullopt);

/// D_p evaluated from a prebuilt account (compact form when the account has
/// only shell 0 and both masses are one).
DpResult dp_from_account(const DyadicAccount& account, double p);

/// Constant-free flattened sum
///   sum_n 2^{pn} sum_{l>=0} 2^{-pl} sum_F |mu(2^n F cap B_n) - nu(2^n F cap B_n)|.
struct FlattenedSum {
    double partial = 0.0;     // levels l <= depth
    double tail = 0.0;        // exact when tail_exact, otherwise an upper bound
    bool tail_exact = false;
    [[nodiscard]] double total() const { return partial + tail; }
};

FlattenedSum flattened_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, std::size_t depth,
                         std::optional<int> n_max = std::nullopt);
FlattenedSum flattened_bound(const DiscreteMeasure& mu, const ReferenceMeasure& nu, double p, std::size_t depth,
                         std::optional<int> n_max = std::nullopt);
FlattenedSum flattened_from_account(const DyadicAccount& account, double p);

/// Smallest C with D_p <= C * (flattened sum) that follows from the termwise
/// estimate min(a,b)|mu(F)/a - nu(F)/b| <= |mu(F)-nu(F)| + |a-b| nu(F)/b:
/// max(1, (2^p-1)/2, 2 - 2^{1-p}); equal to 1 for p <= 1.
double flattened_constant(double p);

/// Dyadic greedy coupling: per shell, mass is matched inside the deepest
/// common cell first and leftovers climb the tree; mass that changes shell is
/// coupled by the normalized product of the two excess measures.
/// cost_p <= kappa(p,d) * (D_p + truncation_bound).
TransportPlan build_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, std::size_t depth);

}  // namespace dyadic
}  // namespace wrate
