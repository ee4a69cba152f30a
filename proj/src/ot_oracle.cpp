// SPDX-License-Identifier: MIT
#include "wrate/ot_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "network_simplex.hpp"
#include "quadrature.hpp"
#include "wrate/errors.hpp"

namespace wrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_cost(const CostSpec& cost) {
    if (!(cost.p > 0.0) || !std::isfinite(cost.p)) throw std::invalid_argument("cost exponent p must be positive");
}

void check_line(const DiscreteMeasure& mu, const CostSpec& cost) {
    check_cost(cost);
    if (mu.dim() != 1) throw std::invalid_argument("w1d_exact needs one-dimensional measures");
    if (cost.p < 1.0) throw std::invalid_argument("w1d_exact needs p >= 1; use wexact_discrete for concave costs");
}

// Integral over (lo, hi] of |x - y| against the law.
double abs_dev(const Law1D& law, double x, double lo, double hi) {
    if (x <= lo) return law.partial_moment(1, lo, hi) - x * law.partial_moment(0, lo, hi);
    if (x >= hi) return x * law.partial_moment(0, lo, hi) - law.partial_moment(1, lo, hi);
    return x * law.partial_moment(0, lo, x) - law.partial_moment(1, lo, x) + law.partial_moment(1, x, hi) -
           x * law.partial_moment(0, x, hi);
}

// Integral over u in [u0, u1] of |x - G^{-1}(u)|^p, by Gauss-Legendre.
double quantile_segment(const Law1D& law, double x, double u0, double u1, double p) {
    static const detail::GaussRule g = detail::gauss_legendre(16);
    auto piece = [&](double a, double b) {
        double s = 0.0;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t k = 0; k < g.nodes.size(); ++k)
            s += g.weights[k] * std::pow(std::fabs(x - law.quantile(mid + half * g.nodes[k])), p);
        return half * s;
    };
    if (u0 < 0.5 && u1 > 0.5) return piece(u0, 0.5) + piece(0.5, u1);
    return piece(u0, u1);
}

}  // namespace

double apply_mode(double tp, const CostSpec& cost) {
    if (cost.mode == CostSpec::Mode::raw || cost.p <= 1.0) return tp;
    return std::pow(tp, 1.0 / cost.p);
}

double ground_cost(std::span<const double> x, std::span<const double> y, double p) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return std::pow(std::sqrt(s), p);
}

double w1d_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost) {
    check_line(mu, cost);
    if (nu.dim() != 1) throw std::invalid_argument("w1d_exact needs one-dimensional measures");
    // Atoms are stored in ascending order.
    std::size_t i = 0, j = 0;
    double ra = mu.weight(0), rb = nu.weight(0), tp = 0.0;
    while (i < mu.size() && j < nu.size()) {
        const double m = std::min(ra, rb);
        tp += m * std::pow(std::fabs(mu.point(i)[0] - nu.point(j)[0]), cost.p);
        ra = ra == m ? 0.0 : ra - m;
        rb = rb == m ? 0.0 : rb - m;
        if (ra == 0.0 && ++i < mu.size()) ra = mu.weight(i);
        if (rb == 0.0 && ++j < nu.size()) rb = nu.weight(j);
    }
    return apply_mode(tp, cost);
}

double w1d_exact(const DiscreteMeasure& mu, const Law1D& nu, const CostSpec& cost) {
    check_line(mu, cost);
    const double p = cost.p;
    if (nu.moment_order_finite() <= p) return apply_mode(kInf, cost);
    const bool bounded = std::isfinite(nu.support_min()) && std::isfinite(nu.support_max());
    if (p != 1.0 && p != 2.0 && !bounded)
        throw std::domain_error("w1d_exact against an unbounded law supports p = 1 or p = 2 only");
    double tp = 0.0, c0 = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double c1 = i + 1 == mu.size() ? 1.0 : std::min(1.0, c0 + mu.weight(i));
        const double x = mu.point(i)[0];
        const bool end = i == 0 || i + 1 == mu.size();
        if (p == 1.0) {
            tp += abs_dev(nu, x, nu.quantile(c0), nu.quantile(c1));
        } else if (bounded || !end) {
            tp += quantile_segment(nu, x, c0, c1, p);
        } else {
            const double lo = nu.quantile(c0), hi = nu.quantile(c1);
            tp += x * x * nu.partial_moment(0, lo, hi) - 2.0 * x * nu.partial_moment(1, lo, hi) +
                  nu.partial_moment(2, lo, hi);
        }
        c0 = c1;
    }
    return apply_mode(tp, cost);
}

ExactResult wexact_discrete(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost,
                            std::size_t entry_cap) {
    check_cost(cost);
    if (mu.dim() != nu.dim()) throw std::invalid_argument("measures differ in dimension");
    const std::size_t n = mu.size(), m = nu.size();
    if (n > entry_cap / m)
        throw CapExceeded(fmt::format("transport problem {} x {} exceeds the entry cap {}", n, m, entry_cap));
    std::vector<double> c(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) c[i * m + j] = ground_cost(mu.point(i), nu.point(j), cost.p);
    const std::vector<double> a(mu.weights().begin(), mu.weights().end());
    const std::vector<double> b(nu.weights().begin(), nu.weights().end());
    const auto sol = detail::solve_transport(a, b, c);
    ExactResult r;
    r.plan.p = cost.p;
    for (std::size_t k = 0; k < sol.flow.size(); ++k)
        if (sol.flow[k] > 0.0) r.plan.entries.push_back({k / m, k % m, sol.flow[k]});
    r.plan.cost_p = sol.cost;
    r.value = apply_mode(sol.cost, cost);
    return r;
}

double wexact_assignment(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost) {
    check_cost(cost);
    if (mu.dim() != nu.dim()) throw std::invalid_argument("measures differ in dimension");
    if (mu.size() != nu.size()) throw std::invalid_argument("assignment needs equal atom counts");
    if (!mu.has_uniform_weights() || !nu.has_uniform_weights())
        throw std::invalid_argument("assignment needs uniform weights");
    const std::size_t n = mu.size();
    // Potentials form (1-based, row 0 / column 0 are sentinels).
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    auto a = [&](std::size_t i, std::size_t j) { return ground_cost(mu.point(i - 1), nu.point(j - 1), cost.p); };
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (std::size_t j = 1; j <= n; ++j) total += a(match[j], j);
    return apply_mode(total / static_cast<double>(n), cost);
}

}  // namespace wrate
