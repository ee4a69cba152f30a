// SPDX-License-Identifier: MIT
#include "wrate/law1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "quadrature.hpp"
#include "wrate/rng.hpp"

namespace wrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Integral of x^j over [lo, hi] (finite, lo <= hi).
double power_integral(int j, double lo, double hi) {
    switch (j) {
        case 0: return hi - lo;
        case 1: return 0.5 * (hi * hi - lo * lo);
        case 2: return (hi * hi * hi - lo * lo * lo) / 3.0;
        default: throw std::invalid_argument("partial_moment: order must be 0, 1 or 2");
    }
}

// Integral of |x|^q over [lo, hi].
double abs_power_integral(double q, double lo, double hi) {
    const auto prim = [q](double t) { return std::pow(std::fabs(t), q + 1.0) / (q + 1.0); };
    if (lo >= 0.0) return prim(hi) - prim(lo);
    if (hi <= 0.0) return prim(lo) - prim(hi);
    return prim(lo) + prim(hi);
}

// Uniform density `dens` on [lo, hi] intersected with (a, b].
double uniform_piece_moment(int j, double lo, double hi, double dens, double a, double b) {
    const double x0 = std::max(lo, a);
    const double x1 = std::min(hi, b);
    if (!(x1 > x0)) return 0.0;
    return dens * power_integral(j, x0, x1);
}

// Positive Pareto branch: density (q/2) x^{-q-1} on [1, inf), over [lo, hi].
double pareto_branch_moment(int j, double q, double lo, double hi) {
    lo = std::max(lo, 1.0);
    if (!(hi > lo)) return 0.0;
    const double jd = j;
    if (std::isinf(hi)) {
        if (jd >= q) return kInf;
        return 0.5 * q * std::pow(lo, jd - q) / (q - jd);
    }
    if (jd == q) return 0.5 * q * std::log(hi / lo);
    return 0.5 * q * (std::pow(hi, jd - q) - std::pow(lo, jd - q)) / (jd - q);
}

}  // namespace

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_quantile(double u) {
    if (u <= 0.0) return -kInf;
    if (u >= 1.0) return kInf;
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double plow = 0.02425;
    double x;
    if (u < plow) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - plow) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement; residual taken on the smaller tail for accuracy.
    const double e = (u < 0.5) ? normal_cdf(x) - u : (1.0 - u) - normal_sf(x);
    const double g = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= g / (1.0 + 0.5 * x * g);
    return x;
}

Law1D Law1D::uniform(double lo, double hi) {
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("uniform law needs finite lo < hi");
    return {Kind::uniform, lo, hi};
}

Law1D Law1D::normal(double mean, double sd) {
    if (!(sd > 0.0) || !std::isfinite(mean)) throw std::invalid_argument("normal law needs sd > 0");
    return {Kind::normal, mean, sd};
}

Law1D Law1D::split_uniform(double gap) {
    if (!(gap >= 0.0 && gap < 1.0)) throw std::invalid_argument("split_uniform gap must lie in [0, 1)");
    return {Kind::split_uniform, gap, 0.0};
}

Law1D Law1D::pareto_symmetric(double tail_index) {
    if (!(tail_index > 0.0)) throw std::invalid_argument("pareto tail index must be > 0");
    return {Kind::pareto_symmetric, tail_index, 0.0};
}

std::string Law1D::describe() const {
    switch (kind_) {
        case Kind::uniform: return fmt::format("uniform({},{})", a_, b_);
        case Kind::normal: return fmt::format("normal({},{})", a_, b_);
        case Kind::split_uniform: return fmt::format("split_uniform({})", a_);
        case Kind::pareto_symmetric: return fmt::format("pareto({})", a_);
    }
    return "?";
}

double Law1D::cdf(double x) const {
    switch (kind_) {
        case Kind::uniform:
            if (x <= a_) return 0.0;
            if (x >= b_) return 1.0;
            return (x - a_) / (b_ - a_);
        case Kind::normal: return normal_cdf((x - a_) / b_);
        case Kind::split_uniform: {
            const double g = a_;
            const double dens = 0.5 / (1.0 - g);
            if (x <= -1.0) return 0.0;
            if (x <= -g) return (x + 1.0) * dens;
            if (x <= g) return 0.5;
            if (x <= 1.0) return 0.5 + (x - g) * dens;
            return 1.0;
        }
        case Kind::pareto_symmetric:
            if (x <= -1.0) return 0.5 * std::pow(-x, -a_);
            if (x < 1.0) return 0.5;
            return 1.0 - 0.5 * std::pow(x, -a_);
    }
    return 0.0;
}

double Law1D::quantile(double u) const {
    if (u <= 0.0) return support_min();
    if (u >= 1.0) return support_max();
    switch (kind_) {
        case Kind::uniform: return a_ + u * (b_ - a_);
        case Kind::normal: return a_ + b_ * normal_quantile(u);
        case Kind::split_uniform: {
            const double g = a_;
            if (u <= 0.5) return -1.0 + 2.0 * u * (1.0 - g);
            return g + 2.0 * (u - 0.5) * (1.0 - g);
        }
        case Kind::pareto_symmetric:
            if (u <= 0.5) return -std::pow(2.0 * u, -1.0 / a_);
            return std::pow(2.0 * (1.0 - u), -1.0 / a_);
    }
    return 0.0;
}

double Law1D::interval_mass(double a, double b) const {
    if (!(b > a)) return 0.0;
    if (kind_ == Kind::normal) {
        const double za = (a - a_) / b_;
        const double zb = (b - a_) / b_;
        if (za > 0.0) return std::max(0.0, normal_sf(za) - normal_sf(zb));
        return std::max(0.0, normal_cdf(zb) - normal_cdf(za));
    }
    if (kind_ == Kind::pareto_symmetric && a >= 1.0) {
        // 1 - F on the right branch is 0.5 x^{-q}.
        const double sa = 0.5 * std::pow(a, -a_);
        const double sb = std::isinf(b) ? 0.0 : 0.5 * std::pow(b, -a_);
        return std::max(0.0, sa - sb);
    }
    return std::max(0.0, cdf(b) - cdf(a));
}

double Law1D::partial_moment(int j, double a, double b) const {
    if (j < 0 || j > 2) throw std::invalid_argument("partial_moment: order must be 0, 1 or 2");
    if (!(b > a)) return 0.0;
    switch (kind_) {
        case Kind::uniform: return uniform_piece_moment(j, a_, b_, 1.0 / (b_ - a_), a, b);
        case Kind::split_uniform: {
            const double dens = 0.5 / (1.0 - a_);
            return uniform_piece_moment(j, -1.0, -a_, dens, a, b) + uniform_piece_moment(j, a_, 1.0, dens, a, b);
        }
        case Kind::normal: {
            if (j == 0) return interval_mass(a, b);
            const double m = a_, s = b_;
            const double za = (a - m) / s, zb = (b - m) / s;
            const double mass = interval_mass(a, b);
            const double pa = std::isinf(za) ? 0.0 : normal_pdf(za);
            const double pb = std::isinf(zb) ? 0.0 : normal_pdf(zb);
            const double m1 = pa - pb;  // integral of z phi(z) over (za, zb]
            if (j == 1) return m * mass + s * m1;
            const double zpa = std::isinf(za) ? 0.0 : za * pa;
            const double zpb = std::isinf(zb) ? 0.0 : zb * pb;
            const double m2 = mass + zpa - zpb;  // integral of z^2 phi(z)
            return m * m * mass + 2.0 * m * s * m1 + s * s * m2;
        }
        case Kind::pareto_symmetric: {
            const double q = a_;
            const double right = pareto_branch_moment(j, q, a, b);
            // left branch: x in (a, b] with x <= -1  <=>  y = -x in [-b, -a), y >= 1
            double left = pareto_branch_moment(j, q, -b, -a);
            if (j == 1) left = -left;
            return right + left;
        }
    }
    return 0.0;
}

double Law1D::abs_moment(double q) const {
    if (!(q > 0.0)) throw std::invalid_argument("moment order must be > 0");
    switch (kind_) {
        case Kind::uniform: return abs_power_integral(q, a_, b_) / (b_ - a_);
        case Kind::split_uniform: return (1.0 - std::pow(a_, q + 1.0)) / ((q + 1.0) * (1.0 - a_));
        case Kind::normal: {
            const double m = a_, s = b_;
            if (m == 0.0)
                return std::pow(s, q) * std::pow(2.0, 0.5 * q) * std::tgamma(0.5 * (q + 1.0)) /
                       std::sqrt(std::numbers::pi);
            // |m + s z|^q phi(z), kink at z0 = -m/s.
            const double z0 = -m / s;
            const auto f = [&](double z) { return std::pow(std::fabs(m + s * z), q) * normal_pdf(z); };
            const double lo = std::min(-40.0, z0 - 40.0), hi = std::max(40.0, z0 + 40.0);
            return detail::integrate(f, lo, z0, 256) + detail::integrate(f, z0, hi, 256);
        }
        case Kind::pareto_symmetric:
            if (q >= a_) throw std::invalid_argument(fmt::format(
                "moment of order {} is infinite for a Pareto law with tail index {}", q, a_));
            return a_ / (a_ - q);
    }
    return 0.0;
}

double Law1D::moment_order_finite() const {
    return kind_ == Kind::pareto_symmetric ? a_ : kInf;
}

double Law1D::support_min() const {
    switch (kind_) {
        case Kind::uniform: return a_;
        case Kind::split_uniform: return -1.0;
        default: return -kInf;
    }
}

double Law1D::support_max() const {
    switch (kind_) {
        case Kind::uniform: return b_;
        case Kind::split_uniform: return 1.0;
        default: return kInf;
    }
}

double Law1D::sample(Rng& rng) const {
    switch (kind_) {
        case Kind::uniform: return b_ - (b_ - a_) * rng.uniform();  // (lo, hi]
        case Kind::normal: return rng.normal(a_, b_);
        case Kind::split_uniform: {
            if (rng.bernoulli(0.5)) return a_ + (1.0 - a_) * rng.uniform_pos();  // (g, 1]
            return -a_ - (1.0 - a_) * rng.uniform();                              // (-1, -g]
        }
        case Kind::pareto_symmetric: {
            const double r = std::pow(rng.uniform_pos(), -1.0 / a_);
            return rng.bernoulli(0.5) ? r : -r;
        }
    }
    return 0.0;
}

}  // namespace wrate
