// SPDX-License-Identifier: MIT
//
// Sample generators: i.i.d. draws from reference laws, the stationary
// Gaussian AR(1) chain (rho-mixing with rho_n = a^n), the same kernel started
// from a Gaussian initial law, and the McKean-Vlasov particle system with its
// synchronously coupled nonlinear particles.
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wrate/measures.hpp"

namespace wrate {

class Rng;

/// Row-major n x d draws.
std::vector<double> sample_iid(const ReferenceMeasure& ref, std::size_t n, Rng& rng);

struct Ar1Spec {
    double a = 0.5;
    std::size_t dim = 1;
};

/// X_1 ~ N(0, I), X_{k+1} = a X_k + sqrt(1 - a^2) xi_k, coordinates independent.
std::vector<double> sample_ar1(const Ar1Spec& spec, std::size_t n, Rng& rng);

/// AR(1) kernel with initial law nu = N(init_mean, init_sd^2) per coordinate.
/// dnu/dpi lies in L^r(pi) iff 0 < init_sd^2 < r / (r - 1).
struct MarkovSpec {
    double a = 0.5;
    std::size_t dim = 1;
    double init_mean = 0.0;
    double init_sd = 1.0;
    double r = 2.0;
};

/// Throws std::invalid_argument when the density-ratio condition fails.
void validate(const MarkovSpec& spec);
std::vector<double> sample_markov(const MarkovSpec& spec, std::size_t n, Rng& rng);

/// Sample source for the Monte Carlo harness: a process together with the
/// law its empirical measures are compared against.
class ProcessSpec {
public:
    enum class Kind { iid, ar1, markov };

    static ProcessSpec iid(ReferenceMeasure ref);
    /// Target is the stationary law N(0, I).
    static ProcessSpec ar1(Ar1Spec spec);
    static ProcessSpec markov(MarkovSpec spec);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t dim() const noexcept { return target_->dim(); }
    [[nodiscard]] const ReferenceMeasure& target() const noexcept { return *target_; }
    [[nodiscard]] std::string describe() const;
    /// n consecutive points, row-major.
    [[nodiscard]] std::vector<double> sample(std::size_t n, Rng& rng) const;

private:
    ProcessSpec(Kind k, std::shared_ptr<const ReferenceMeasure> t) : kind_(k), target_(std::move(t)) {}

    Kind kind_;
    std::shared_ptr<const ReferenceMeasure> target_;
    Ar1Spec ar1_{};
    MarkovSpec markov_{};
};

struct McKeanVlasovSpec {
    enum class Potential { quadratic, power };
    Potential potential = Potential::quadratic;
    double beta = 1.0;    // V = beta |x|^2 / 2
    double alpha = 4.0;   // V = |x|^alpha, alpha > 2
    std::size_t dim = 1;
    double dt = 0.005;
    double horizon = 10.0;
    double x0 = 1.0;           // common starting point, every coordinate
    double noise_scale = 1.0;  // multiplies sqrt(2) dB; 0 gives the deterministic flow
    std::size_t proxy_particles = 10000;  // mean-field proxy for the power case

    /// Called after every step with (step, time, interacting states).
    std::function<void(std::size_t, double, std::span<const double>)> observer;
};

struct McKeanVlasovResult {
    std::vector<double> interacting;  // N x d
    std::vector<double> nonlinear;    // N x d
    double discrepancy = 0.0;         // (1/N) sum_i |X^{i,N}_T - X^i_T|^2
    std::size_t steps = 0;
};

void validate(const McKeanVlasovSpec& spec);
/// Euler-Maruyama; the power case uses the tamed step dt / (1 + max|x|^{alpha-2}).
/// Throws NumericalAbort when a state becomes non-finite.
McKeanVlasovResult simulate_mkv(const McKeanVlasovSpec& spec, std::size_t particles, Rng& rng);

/// Mean of the nonlinear process at time t in the quadratic case: x0 e^{-beta t}.
double mkv_quadratic_mean(const McKeanVlasovSpec& spec, double t);

}  // namespace wrate
