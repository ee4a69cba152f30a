// SPDX-License-Identifier: MIT
//
// One-dimensional laws with closed-form CDF, quantile and truncated moments.
// They serve as the marginals of product reference measures and as the
// continuous targets of the exact 1-D transport evaluation.
#pragma once

#include <string>

namespace wrate {

class Rng;

class Law1D {
public:
    enum class Kind { uniform, normal, split_uniform, pareto_symmetric };

    /// Uniform on (lo, hi].
    static Law1D uniform(double lo, double hi);
    /// N(mean, sd^2).
    static Law1D normal(double mean, double sd);
    /// Uniform on (-1, -gap] U (gap, 1], gap in [0, 1).
    static Law1D split_uniform(double gap);
    /// Density (q/2)|x|^{-q-1} on |x| >= 1.
    static Law1D pareto_symmetric(double tail_index);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] std::string describe() const;

    [[nodiscard]] double cdf(double x) const;
    /// Generalized inverse on (0, 1); 0 and 1 map to the support ends.
    [[nodiscard]] double quantile(double u) const;
    /// nu((a, b]), computed without cancellation in the tails where possible.
    [[nodiscard]] double interval_mass(double a, double b) const;
    /// Integral of x^j over (a, b] for j in {0, 1, 2}; a, b may be infinite.
    /// Returns +inf when the moment diverges.
    [[nodiscard]] double partial_moment(int j, double a, double b) const;
    /// E|X|^q.
    [[nodiscard]] double abs_moment(double q) const;
    /// Supremum of q with E|X|^q finite.
    [[nodiscard]] double moment_order_finite() const;
    [[nodiscard]] double support_min() const;
    [[nodiscard]] double support_max() const;

    [[nodiscard]] double sample(Rng& rng) const;

    // Parameters; meaning depends on kind.
    [[nodiscard]] double a() const noexcept { return a_; }
    [[nodiscard]] double b() const noexcept { return b_; }

private:
    Law1D(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}

    Kind kind_;
    double a_;  // lo | mean | gap | tail index
    double b_;  // hi | sd
};

/// Standard normal CDF and upper tail.
double normal_cdf(double z);
double normal_sf(double z);
double normal_pdf(double z);
/// Inverse standard normal CDF (Acklam's rational approximation + one Halley step).
double normal_quantile(double u);

}  // namespace wrate
