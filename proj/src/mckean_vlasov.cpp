// SPDX-License-Identifier: MIT
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "wrate/errors.hpp"
#include "wrate/rng.hpp"
#include "wrate/samplers.hpp"

namespace wrate {

namespace {

using Spec = McKeanVlasovSpec;

double sq_norm(const double* x, std::size_t d) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += x[c] * x[c];
    return s;
}

// grad V at x, written to g.
void grad_v(const Spec& s, const double* x, double* g) {
    if (s.potential == Spec::Potential::quadratic) {
        for (std::size_t c = 0; c < s.dim; ++c) g[c] = s.beta * x[c];
        return;
    }
    const double r = std::sqrt(sq_norm(x, s.dim));
    const double f = r > 0.0 ? s.alpha * std::pow(r, s.alpha - 2.0) : 0.0;
    for (std::size_t c = 0; c < s.dim; ++c) g[c] = f * x[c];
}

void column_mean(const std::vector<double>& x, std::size_t d, std::vector<double>& m) {
    std::fill(m.begin(), m.end(), 0.0);
    const std::size_t n = x.size() / d;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) m[c] += x[i * d + c];
    for (auto& v : m) v /= static_cast<double>(n);
}

double max_norm(const std::vector<double>& x, std::size_t d) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size() / d; ++i) m = std::max(m, sq_norm(&x[i * d], d));
    return std::sqrt(m);
}

// One Euler step of dX = sqrt2 noise dB - grad V(X) dt - (X - mean) dt.
void step(const Spec& s, std::vector<double>& x, const std::vector<double>& mean, const std::vector<double>& dw,
          double h) {
    const std::size_t d = s.dim;
    std::vector<double> g(d);
    for (std::size_t i = 0; i < x.size() / d; ++i) {
        double* xi = &x[i * d];
        grad_v(s, xi, g.data());
        for (std::size_t c = 0; c < d; ++c) xi[c] += -(g[c] + xi[c] - mean[c]) * h + dw[i * d + c];
    }
}

void check_finite(const std::vector<double>& x, std::size_t k, double h, const char* which) {
    for (double v : x)
        if (!std::isfinite(v))
            throw NumericalAbort(fmt::format("non-finite {} state at step {} (dt = {:.6g}); reduce the time step", which,
                                             k, h));
}

}  // namespace

void validate(const McKeanVlasovSpec& s) {
    if (s.dim == 0) throw std::invalid_argument("dimension must be positive");
    if (!(s.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(s.horizon >= s.dt)) throw std::invalid_argument("horizon T must be at least dt");
    if (s.potential == Spec::Potential::quadratic && !(s.beta > 0.0))
        throw std::invalid_argument("quadratic potential needs beta > 0");
    if (s.potential == Spec::Potential::power && !(s.alpha > 2.0))
        throw std::invalid_argument("power potential needs alpha > 2");
    if (!(s.noise_scale >= 0.0)) throw std::invalid_argument("noise scale must be nonnegative");
}

double mkv_quadratic_mean(const McKeanVlasovSpec& spec, double t) { return spec.x0 * std::exp(-spec.beta * t); }

McKeanVlasovResult simulate_mkv(const McKeanVlasovSpec& s, std::size_t n, Rng& rng) {
    validate(s);
    if (n < 2) throw std::invalid_argument("the particle system needs at least two particles");
    const std::size_t d = s.dim;
    const bool power = s.potential == Spec::Potential::power;
    McKeanVlasovResult res;
    res.interacting.assign(n * d, s.x0);
    res.nonlinear.assign(n * d, s.x0);
    std::vector<double> proxy;
    if (power) proxy.assign(std::max<std::size_t>(s.proxy_particles, 2) * d, s.x0);

    std::vector<double> dw(n * d), dw_proxy(proxy.size());
    std::vector<double> mean_i(d), mean_nl(d);
    const double amp = std::numbers::sqrt2 * s.noise_scale;
    double t = 0.0;
    std::size_t k = 0;
    while (t < s.horizon * (1.0 - 1e-12)) {
        double h = s.dt;
        if (power) {
            const double r = std::max({max_norm(res.interacting, d), max_norm(res.nonlinear, d), max_norm(proxy, d)});
            h = s.dt / (1.0 + std::pow(r, s.alpha - 2.0));
        }
        h = std::min(h, s.horizon - t);
        const double sd = amp * std::sqrt(h);
        for (auto& v : dw) v = sd * rng.normal();
        for (auto& v : dw_proxy) v = sd * rng.normal();

        column_mean(res.interacting, d, mean_i);
        if (power) {
            column_mean(proxy, d, mean_nl);
        } else {
            std::fill(mean_nl.begin(), mean_nl.end(), mkv_quadratic_mean(s, t));
        }
        step(s, res.interacting, mean_i, dw, h);
        step(s, res.nonlinear, mean_nl, dw, h);
        if (power) step(s, proxy, mean_nl, dw_proxy, h);
        t += h;
        ++k;
        check_finite(res.interacting, k, h, "interacting");
        check_finite(res.nonlinear, k, h, "nonlinear");
        if (power) check_finite(proxy, k, h, "proxy");
        if (s.observer) s.observer(k, t, res.interacting);
    }
    res.steps = k;
    double acc = 0.0;
    for (std::size_t i = 0; i < n * d; ++i) {
        const double diff = res.interacting[i] - res.nonlinear[i];
        acc += diff * diff;
    }
    res.discrepancy = acc / static_cast<double>(n);
    return res;
}

}  // namespace wrate
