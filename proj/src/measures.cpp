// SPDX-License-Identifier: MIT
#include "wrate/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "wrate/rng.hpp"

namespace wrate {

DiscreteMeasure::DiscreteMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights)
    : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("measure dimension must be positive");
    if (coords.size() != weights.size() * dim)
        throw std::invalid_argument("every point must have exactly `dim` coordinates");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be finite and nonnegative");
        total += w;
    }
    for (double c : coords)
        if (!std::isfinite(c)) throw std::invalid_argument("coordinates must be finite");
    if (!(total > 0.0)) throw std::invalid_argument("measure has no mass");

    const std::size_t n = weights.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto less = [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(coords.begin() + a * dim, coords.begin() + (a + 1) * dim,
                                            coords.begin() + b * dim, coords.begin() + (b + 1) * dim);
    };
    std::stable_sort(order.begin(), order.end(), less);

    coords_.reserve(coords.size());
    weights_.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        if (weights[i] == 0.0) continue;
        const bool dup = !weights_.empty() &&
                         std::equal(coords.begin() + i * dim, coords.begin() + (i + 1) * dim, coords_.end() - dim);
        if (dup) {
            weights_.back() += weights[i];
        } else {
            coords_.insert(coords_.end(), coords.begin() + i * dim, coords.begin() + (i + 1) * dim);
            weights_.push_back(weights[i]);
        }
    }
    for (double& w : weights_) w /= total;
}

DiscreteMeasure DiscreteMeasure::dirac(std::vector<double> point) {
    const std::size_t d = point.size();
    return DiscreteMeasure(d, std::move(point), {1.0});
}

bool DiscreteMeasure::has_uniform_weights(double tol) const {
    const double target = 1.0 / static_cast<double>(size());
    return std::all_of(weights_.begin(), weights_.end(),
                       [&](double w) { return std::fabs(w - target) <= tol * target; });
}

DiscreteMeasure DiscreteMeasure::scaled(double factor) const {
    std::vector<double> c(coords_);
    for (double& x : c) x *= factor;
    return DiscreteMeasure(dim_, std::move(c), weights_);
}

DiscreteMeasure DiscreteMeasure::translated(std::span<const double> shift) const {
    if (shift.size() != dim_) throw std::invalid_argument("shift dimension mismatch");
    std::vector<double> c(coords_);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += shift[i % dim_];
    return DiscreteMeasure(dim_, std::move(c), weights_);
}

DiscreteMeasure empirical(std::size_t dim, std::vector<double> samples) {
    if (dim == 0) throw std::invalid_argument("empirical: dimension must be positive");
    if (samples.empty()) throw std::invalid_argument("empirical: empty sample list");
    if (samples.size() % dim != 0) throw std::invalid_argument("empirical: inconsistent dimensions");
    const std::size_t n = samples.size() / dim;
    return DiscreteMeasure(dim, std::move(samples), std::vector<double>(n, 1.0));
}

double norm(std::span<const double> x) {
    if (x.size() == 1) return std::fabs(x[0]);
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double moment(const DiscreteMeasure& m, double q) {
    if (!(q > 0.0)) throw std::invalid_argument("moment order must be > 0");
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double r = norm(m.point(i));
        if (r > 0.0) s += m.weight(i) * std::pow(r, q);
    }
    return s;
}

double exp_moment(const DiscreteMeasure& m, double alpha, double gamma) {
    if (!(alpha > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("exp_moment needs alpha, gamma > 0");
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double r = norm(m.point(i));
        s += m.weight(i) * std::exp(gamma * std::pow(r, alpha));
    }
    return s;
}

std::size_t poissonized_sample_size(std::size_t n_target, Rng& rng) {
    if (n_target == 0) throw std::invalid_argument("poissonized_sample_size: n_target must be >= 1");
    return static_cast<std::size_t>(rng.poisson(static_cast<double>(n_target)));
}

}  // namespace wrate
