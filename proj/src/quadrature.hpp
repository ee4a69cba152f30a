// SPDX-License-Identifier: MIT
// Internal: Gauss-Legendre rules.
#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace wrate::detail {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

inline GaussRule gauss_legendre(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    return r;
}

/// Composite Gauss-Legendre integral of f over [a, b] with `panels` panels.
template <class F>
double integrate(F&& f, double a, double b, int panels = 64, int order = 16) {
    static const GaussRule rule16 = gauss_legendre(16);
    const GaussRule& rule = (order == 16) ? rule16 : gauss_legendre(order);
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double mid = a + (k + 0.5) * h;
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            s += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
        total += 0.5 * h * s;
    }
    return total;
}

}  // namespace wrate::detail
