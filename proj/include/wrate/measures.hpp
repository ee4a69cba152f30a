// SPDX-License-Identifier: MIT
//
// Measure representations: finite weighted point clouds (every empirical
// measure) and the reference laws the experiments sample from.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wrate/law1d.hpp"

namespace wrate {

class Rng;

/// Finite weighted point cloud in R^d. Weights are normalized to sum to one,
/// zero-weight atoms are dropped and duplicate locations merged; atoms are
/// stored in lexicographic order of their coordinates.
class DiscreteMeasure {
public:
    /// `coords` is row-major, `weights.size()` rows of `dim` values.
    DiscreteMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights);

    static DiscreteMeasure dirac(std::vector<double> point);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
    [[nodiscard]] std::span<const double> point(std::size_t i) const {
        return {coords_.data() + i * dim_, dim_};
    }
    [[nodiscard]] double weight(std::size_t i) const { return weights_[i]; }
    [[nodiscard]] std::span<const double> coords() const noexcept { return coords_; }
    [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }

    /// True when every weight equals 1/size() within `tol` (relative).
    [[nodiscard]] bool has_uniform_weights(double tol = 1e-12) const;

    [[nodiscard]] DiscreteMeasure scaled(double factor) const;
    [[nodiscard]] DiscreteMeasure translated(std::span<const double> shift) const;

private:
    std::size_t dim_;
    std::vector<double> coords_;
    std::vector<double> weights_;
};

/// Uniform-weight measure on the given samples (row-major, `dim` columns).
DiscreteMeasure empirical(std::size_t dim, std::vector<double> samples);

/// Reference law mu. Product kinds and the one-dimensional Pareto law report
/// exact box masses; the remaining kinds carry a discrete proxy.
class ReferenceMeasure {
public:
    enum class Kind { two_point, split_support, uniform_cube, pareto_radial, gaussian, product_of_1d, discrete_proxy };

    static constexpr std::size_t kDefaultProxySize = 100000;

    /// w * delta_a + (1 - w) * delta_b.
    static ReferenceMeasure two_point(std::vector<double> a, std::vector<double> b, double w = 0.5);
    /// First coordinate uniform on (-1,-gap] U (gap,1], the rest uniform on (-1,1].
    static ReferenceMeasure split_support(std::size_t dim, double gap);
    static ReferenceMeasure uniform_cube(std::size_t dim, double radius = 1.0);
    /// Density c |x|^{-q-d} on |x| >= 1 (Euclidean norm).
    static ReferenceMeasure pareto_radial(std::size_t dim, double tail_index,
                                          std::size_t proxy_size = kDefaultProxySize,
                                          std::uint64_t proxy_seed = 0x5eed);
    /// Independent normal coordinates.
    static ReferenceMeasure gaussian(std::vector<double> mean, std::vector<double> variance);
    static ReferenceMeasure product(std::vector<Law1D> marginals);
    static ReferenceMeasure discrete_proxy(DiscreteMeasure proxy);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::string describe() const;
    [[nodiscard]] double moment_order_finite() const;

    [[nodiscard]] bool has_analytic_box_masses() const;
    /// mu of the half-open box (lo, hi]; requires has_analytic_box_masses().
    [[nodiscard]] double box_mass(std::span<const double> lo, std::span<const double> hi) const;
    /// True when the support lies inside (-1, 1]^d.
    [[nodiscard]] bool supported_in_unit_cube() const;

    /// Exact one-dimensional law, when dim() == 1 and the law is continuous.
    [[nodiscard]] std::optional<Law1D> law1d() const;
    /// The measure itself when atomic (two_point, discrete_proxy), or the
    /// carried proxy when box masses are not analytic.
    [[nodiscard]] const DiscreteMeasure* as_discrete() const noexcept;
    [[nodiscard]] const std::vector<Law1D>& marginals() const noexcept { return marginals_; }

    /// Writes one draw into `out` (size dim()).
    void sample(Rng& rng, std::span<double> out) const;
    /// n draws, row-major.
    [[nodiscard]] std::vector<double> sample(std::size_t n, Rng& rng) const;
    /// Discrete proxy built from `size` i.i.d. draws.
    [[nodiscard]] ReferenceMeasure make_proxy(std::size_t size, Rng& rng) const;

private:
    ReferenceMeasure(Kind k, std::size_t dim) : kind_(k), dim_(dim) {}

    Kind kind_;
    std::size_t dim_;
    std::vector<Law1D> marginals_;           // product kinds; pareto d = 1
    std::optional<DiscreteMeasure> atoms_;   // two_point, discrete_proxy, pareto d > 1 proxy
    double tail_index_ = 0.0;                // pareto
    double param_ = 0.0;                     // radius | gap
};

/// M_q(m) = sum w_i |x_i|^q.
double moment(const DiscreteMeasure& m, double q);
/// M_q(mu); throws std::invalid_argument outside the finite-moment range and
/// std::domain_error for product laws of dimension > 3 without a closed form.
double moment(const ReferenceMeasure& mu, double q);

/// E_{alpha,gamma}(m) = sum w_i exp(gamma |x_i|^alpha); +inf on overflow.
double exp_moment(const DiscreteMeasure& m, double alpha, double gamma);

/// Poisson(n_target) sample size for the Poissonized empirical measure.
std::size_t poissonized_sample_size(std::size_t n_target, Rng& rng);

/// Euclidean norm.
double norm(std::span<const double> x);

}  // namespace wrate
