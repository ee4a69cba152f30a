// SPDX-License-Identifier: MIT
// Internal helpers shared by the D_p evaluation and the coupling builder.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wrate/measures.hpp"

namespace wrate::dyadic::detail {

struct Item {
    std::uint64_t code;   // depth-L interleaved code of the rescaled atom
    std::uint32_t atom;   // index in its measure
    bool from_mu;
};

/// Interleaved depth-`depth` code of a point already rescaled into (-1,1]^d.
std::uint64_t point_code(std::span<const double> x, int shell, std::size_t depth);

/// Per shell (index n), items of both measures sorted by (code, coordinates).
/// Shells beyond `n_max` are left out; their masses go to mu_beyond/nu_beyond.
struct ShellItems {
    std::vector<std::vector<Item>> items;       // size n_max + 1
    std::vector<double> mu_mass, nu_mass;        // size n_max + 1
    std::vector<double> mu_beyond, nu_beyond;    // shells n_max+1 .. n_top
    int n_max = 0;
};

ShellItems collect_shells(const DiscreteMeasure& mu, const DiscreteMeasure* nu, std::size_t depth,
                          std::optional<int> n_max);

/// True when the two atoms sit at the same location.
bool same_location(const Item& a, const Item& b, const DiscreteMeasure& mu, const DiscreteMeasure* nu);

}  // namespace wrate::dyadic::detail
