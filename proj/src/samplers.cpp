// SPDX-License-Identifier: MIT
#include "wrate/samplers.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "wrate/rng.hpp"

namespace wrate {

namespace {

void check_coefficient(double a) {
    if (!(std::fabs(a) < 1.0)) throw std::invalid_argument("AR(1) coefficient must satisfy |a| < 1");
}

// Fills rows 1..n-1 from row 0 with the AR(1) recursion.
void run_chain(std::vector<double>& x, std::size_t n, std::size_t d, double a, Rng& rng) {
    const double s = std::sqrt(1.0 - a * a);
    for (std::size_t k = 1; k < n; ++k)
        for (std::size_t c = 0; c < d; ++c) x[k * d + c] = a * x[(k - 1) * d + c] + s * rng.normal();
}

std::shared_ptr<const ReferenceMeasure> standard_normal(std::size_t d) {
    return std::make_shared<const ReferenceMeasure>(
        ReferenceMeasure::gaussian(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)));
}

}  // namespace

std::vector<double> sample_iid(const ReferenceMeasure& ref, std::size_t n, Rng& rng) { return ref.sample(n, rng); }

std::vector<double> sample_ar1(const Ar1Spec& spec, std::size_t n, Rng& rng) {
    check_coefficient(spec.a);
    if (spec.dim == 0) throw std::invalid_argument("dimension must be positive");
    std::vector<double> x(n * spec.dim);
    if (n == 0) return x;
    for (std::size_t c = 0; c < spec.dim; ++c) x[c] = rng.normal();
    run_chain(x, n, spec.dim, spec.a, rng);
    return x;
}

void validate(const MarkovSpec& spec) {
    check_coefficient(spec.a);
    if (spec.dim == 0) throw std::invalid_argument("dimension must be positive");
    if (!(spec.r > 1.0)) throw std::invalid_argument("integrability exponent r must exceed 1");
    if (!(spec.init_sd > 0.0))
        throw std::invalid_argument("initial law has no density with respect to the invariant law");
    const double limit = spec.r / (spec.r - 1.0);
    if (!(spec.init_sd * spec.init_sd < limit))
        throw std::invalid_argument(fmt::format(
            "initial variance {} makes dnu/dpi leave L^{}(pi); it must stay below {}", spec.init_sd * spec.init_sd,
            spec.r, limit));
}

std::vector<double> sample_markov(const MarkovSpec& spec, std::size_t n, Rng& rng) {
    validate(spec);
    std::vector<double> x(n * spec.dim);
    if (n == 0) return x;
    for (std::size_t c = 0; c < spec.dim; ++c) x[c] = rng.normal(spec.init_mean, spec.init_sd);
    run_chain(x, n, spec.dim, spec.a, rng);
    return x;
}

ProcessSpec ProcessSpec::iid(ReferenceMeasure ref) {
    return {Kind::iid, std::make_shared<const ReferenceMeasure>(std::move(ref))};
}

ProcessSpec ProcessSpec::ar1(Ar1Spec spec) {
    check_coefficient(spec.a);
    ProcessSpec p(Kind::ar1, standard_normal(spec.dim));
    p.ar1_ = spec;
    return p;
}

ProcessSpec ProcessSpec::markov(MarkovSpec spec) {
    validate(spec);
    ProcessSpec p(Kind::markov, standard_normal(spec.dim));
    p.markov_ = spec;
    return p;
}

std::string ProcessSpec::describe() const {
    switch (kind_) {
        case Kind::iid: return fmt::format("iid({})", target_->describe());
        case Kind::ar1: return fmt::format("ar1(a={:.17g},d={})", ar1_.a, ar1_.dim);
        case Kind::markov:
            return fmt::format("markov(a={:.17g},d={},init_mean={:.17g},init_sd={:.17g},r={:.17g})", markov_.a,
                               markov_.dim, markov_.init_mean, markov_.init_sd, markov_.r);
    }
    return {};
}

std::vector<double> ProcessSpec::sample(std::size_t n, Rng& rng) const {
    switch (kind_) {
        case Kind::iid: return target_->sample(n, rng);
        case Kind::ar1: return sample_ar1(ar1_, n, rng);
        case Kind::markov: return sample_markov(markov_, n, rng);
    }
    return {};
}

}  // namespace wrate
