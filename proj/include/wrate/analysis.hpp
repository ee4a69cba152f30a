// SPDX-License-Identifier: MIT
//
// Concentration calculators, Monte Carlo harness for mean distances and tail
// frequencies, and rate regression.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wrate/ot_oracle.hpp"
#include "wrate/samplers.hpp"

namespace wrate {

// ---- analytic bounds -------------------------------------------------------

/// (1+x) log(1+x) - x.
double f_fn(double x);
/// (x log x - x + 1) for x >= 1, zero below.
double g_fn(double x);

/// Poisson(lambda) facts (a)-(e); absent when the argument they need is
/// missing or out of range.
struct PoissonBounds {
    std::optional<double> mgf;            // E exp(theta X) = exp(lambda (e^theta - 1))
    std::optional<double> abs_mgf_bound;  // 2 exp(lambda (e^theta - 1 - theta)), theta > 0
    std::optional<double> upper_tail;     // P(X > lambda x) <= exp(-lambda g(x))
    std::optional<double> two_sided;      // P(|X - lambda| > lambda x) <= 2 exp(-lambda f(x))
    std::optional<double> trivial;        // P(X > lambda x) <= lambda
};
PoissonBounds poisson_bounds(double lambda, std::optional<double> x, std::optional<double> theta);

/// Binomial(n, prob) facts (a)-(c).
struct BinomialBounds {
    std::optional<double> two_sided;  // (1{prob(1+z) <= 1} + 1{z <= 1}) exp(-n prob f(z))
    std::optional<double> trivial;    // n prob, for z > 1
    std::optional<double> mgf_bound;  // exp(-n prob (1 - e^{-theta})), theta >= 0
    std::optional<double> mgf;        // (1 - prob + prob e^{-theta})^n
};
BinomialBounds binomial_bounds(std::uint64_t n, double prob, std::optional<double> z, std::optional<double> theta);

struct EnvelopeParams {
    enum class Regime { exp_strong, exp_weak, poly };
    Regime regime = Regime::poly;
    double alpha = 0.0;
    double gamma = 1.0;
    double q = 0.0;
    double epsilon = 0.0;
    double C = 1.0;
    double c = 1.0;
    /// exp_weak only: C exp(-c N x^2 log(1+N)^{-delta}) + C exp(-c (Nx)^{alpha/p}), delta = 2p/alpha - 1.
    bool log_variant = false;
};

struct EnvelopeValue {
    double a = 0.0;  // a(N,x) 1{x <= 1}
    double b = 0.0;
    [[nodiscard]] double total() const { return a + b; }
};

/// Throws std::invalid_argument on inconsistent parameters, and when
/// p < d/2 with p < 1 (no a-branch is stated there).
void validate(const EnvelopeParams& params, double p);
EnvelopeValue envelope(const EnvelopeParams& params, double p, std::size_t d, double n, double x);

// ---- statistics ------------------------------------------------------------

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};
/// Wilson score interval for `successes` out of `trials`.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

struct RateFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};
/// Ordinary least squares of log(value) on log(n); needs >= 4 positive rows.
RateFit fit_rate(const std::vector<double>& n, const std::vector<double>& value);

// ---- Monte Carlo harness ---------------------------------------------------

enum class OracleMode { exact_1d, lp_vs_proxy, dp_only };
std::string to_string(OracleMode mode);
OracleMode parse_oracle_mode(const std::string& s);

struct McConfig {
    double p = 1.0;
    std::size_t reps = 200;
    OracleMode oracle = OracleMode::exact_1d;
    /// lp_vs_proxy: proxy size; 0 means 20 * max N.
    std::size_t proxy_size = 0;
    std::size_t entry_cap = kDefaultEntryCap;
    std::optional<std::size_t> depth;  // default_depth(d) when empty
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    /// Upper limit on reps * max N.
    double budget = 1e9;
    /// tails: use the Poissonized statistic (K/N) D_p with K ~ Poisson(N).
    bool poissonized = false;
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct RateRow {
    std::size_t n = 0;
    double mean_tp = 0.0;  // NaN in dp_only mode
    double mean_dp = 0.0;
    double std_err = 0.0;  // of mean_tp, or of mean_dp in dp_only mode
    std::size_t reps = 0;
    double std_err_dp = 0.0;
};

struct RateTable {
    std::vector<RateRow> rows;  // ascending n
    Metadata metadata;
};

enum class RateColumn { tp, dp };
RateFit fit_rate(const RateTable& table, RateColumn column);

struct TailRow {
    double x = 0.0;
    double empirical_prob = 0.0;
    Interval wilson;
};

struct TailTable {
    std::size_t n = 0;
    std::vector<TailRow> rows;
    Metadata metadata;
};

RateTable mc_mean_distance(const ProcessSpec& process, const std::vector<std::size_t>& n_grid, const McConfig& cfg);
TailTable mc_tail(const ProcessSpec& process, std::size_t n, const std::vector<double>& x_grid, const McConfig& cfg);

/// Raw per-repetition statistic values of a tail experiment (ordered by rep).
std::vector<double> mc_tail_samples(const ProcessSpec& process, std::size_t n, const McConfig& cfg,
                                    Metadata* metadata = nullptr);

// ---- serialization -----------------------------------------------------------

/// `# key = value` metadata lines followed by a CSV header and rows.
std::string to_csv(const RateTable& t);
std::string to_csv(const TailTable& t);
std::string to_json(const RateTable& t);
std::string to_json(const TailTable& t);

/// Shortest round-trip decimal form used in every table.
std::string format_number(double v);

}  // namespace wrate
