// SPDX-License-Identifier: MIT
#include <cmath>
#include <stdexcept>

#include "wrate/analysis.hpp"

namespace wrate {

double f_fn(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("f is defined on (0, inf)");
    if (x < 1e-2) {
        // sum_{k>=2} (-1)^k x^k / (k (k-1))
        double term = x * x, s = 0.0;
        for (int k = 2; k < 12; ++k) {
            s += ((k % 2 == 0) ? term : -term) / (k * (k - 1.0));
            term *= x;
        }
        return s;
    }
    return (1.0 + x) * std::log1p(x) - x;
}

double g_fn(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("g is defined on (0, inf)");
    if (x < 1.0) return 0.0;
    return x * std::log(x) - x + 1.0;
}

PoissonBounds poisson_bounds(double lambda, std::optional<double> x, std::optional<double> theta) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    PoissonBounds b;
    if (theta) {
        b.mgf = std::exp(lambda * std::expm1(*theta));
        if (*theta > 0.0) b.abs_mgf_bound = 2.0 * std::exp(lambda * (std::expm1(*theta) - *theta));
    }
    if (x && *x > 0.0) {
        b.upper_tail = std::exp(-lambda * g_fn(*x));
        b.two_sided = 2.0 * std::exp(-lambda * f_fn(*x));
        b.trivial = lambda;
    }
    return b;
}

BinomialBounds binomial_bounds(std::uint64_t n, double prob, std::optional<double> z, std::optional<double> theta) {
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("prob must lie in (0, 1)");
    const double np = static_cast<double>(n) * prob;
    BinomialBounds b;
    if (z && *z > 0.0) {
        const double ind = (prob * (1.0 + *z) <= 1.0 ? 1.0 : 0.0) + (*z <= 1.0 ? 1.0 : 0.0);
        b.two_sided = ind * std::exp(-np * f_fn(*z));
        if (*z > 1.0) b.trivial = np;
    }
    if (theta && *theta >= 0.0) {
        b.mgf = std::pow(1.0 - prob + prob * std::exp(-*theta), static_cast<double>(n));
        b.mgf_bound = std::exp(-np * -std::expm1(-*theta));
    }
    return b;
}

void validate(const EnvelopeParams& e, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("p must be positive");
    if (!(e.C > 0.0) || !(e.c > 0.0)) throw std::invalid_argument("constants C and c must be positive");
    switch (e.regime) {
        case EnvelopeParams::Regime::exp_strong:
            if (!(e.alpha > p) || !(e.gamma > 0.0))
                throw std::invalid_argument("exp_strong needs alpha > p and gamma > 0");
            break;
        case EnvelopeParams::Regime::exp_weak:
            if (!(e.alpha > 0.0 && e.alpha < p) || !(e.gamma > 0.0))
                throw std::invalid_argument("exp_weak needs alpha in (0, p) and gamma > 0");
            if (!e.log_variant && !(e.epsilon > 0.0 && e.epsilon < e.alpha))
                throw std::invalid_argument("exp_weak needs epsilon in (0, alpha)");
            break;
        case EnvelopeParams::Regime::poly:
            if (!(e.q > 2.0 * p)) throw std::invalid_argument("poly needs q > 2p");
            if (!(e.epsilon > 0.0 && e.epsilon < e.q)) throw std::invalid_argument("poly needs epsilon in (0, q)");
            break;
    }
}

EnvelopeValue envelope(const EnvelopeParams& e, double p, std::size_t d, double n, double x) {
    validate(e, p);
    if (d < 1) throw std::invalid_argument("dimension must be positive");
    if (!(n >= 1.0)) throw std::invalid_argument("N must be at least 1");
    if (!(x > 0.0)) throw std::invalid_argument("x must be positive");
    const double half_d = 0.5 * static_cast<double>(d);
    if (p < half_d && p < 1.0) throw std::invalid_argument("no a-branch is available for p < min(1, d/2)");

    EnvelopeValue v;
    if (x <= 1.0) {
        double expo;
        if (p > half_d) {
            expo = n * x * x;
        } else if (p == half_d) {
            const double r = x / std::log(2.0 + 1.0 / x);
            expo = n * r * r;
        } else {
            expo = n * std::pow(x, static_cast<double>(d) / p);
        }
        v.a = e.C * std::exp(-e.c * expo);
    }
    const double nx = n * x;
    switch (e.regime) {
        case EnvelopeParams::Regime::exp_strong:
            v.b = x > 1.0 ? e.C * std::exp(-e.c * n * std::pow(x, e.alpha / p)) : 0.0;
            break;
        case EnvelopeParams::Regime::exp_weak:
            if (e.log_variant) {
                const double delta = 2.0 * p / e.alpha - 1.0;
                v.b = e.C * std::exp(-e.c * n * x * x * std::pow(std::log1p(n), -delta)) +
                      e.C * std::exp(-e.c * std::pow(nx, e.alpha / p));
            } else if (x <= 1.0) {
                v.b = e.C * std::exp(-e.c * std::pow(nx, (e.alpha - e.epsilon) / p));
            } else {
                v.b = e.C * std::exp(-e.c * std::pow(nx, e.alpha / p));
            }
            break;
        case EnvelopeParams::Regime::poly:
            v.b = e.C * n * std::pow(nx, -(e.q - e.epsilon) / p);
            break;
    }
    return v;
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) throw std::invalid_argument("Wilson interval needs at least one trial");
    if (successes > trials) throw std::invalid_argument("more successes than trials");
    const double n = static_cast<double>(trials);
    const double ph = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (ph + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

RateFit fit_rate(const std::vector<double>& n, const std::vector<double>& value) {
    if (n.size() != value.size()) throw std::invalid_argument("fit_rate: column lengths differ");
    if (n.size() < 4) throw std::invalid_argument("fit_rate needs at least 4 rows");
    const auto k = static_cast<double>(n.size());
    double sx = 0.0, sy = 0.0;
    std::vector<double> lx(n.size()), ly(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(n[i] > 0.0) || !(value[i] > 0.0) || !std::isfinite(value[i]))
            throw std::invalid_argument("fit_rate: rows must be positive and finite");
        lx[i] = std::log(n[i]);
        ly[i] = std::log(value[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / k, my = sy / k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: sample sizes must not all coincide");
    RateFit f;
    f.exponent = sxy / sxx;
    f.intercept = my - f.exponent * mx;
    f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

}  // namespace wrate
