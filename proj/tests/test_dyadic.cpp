// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <map>

#include "support.hpp"
#include "wrate/dyadic.hpp"
#include "wrate/law1d.hpp"
#include "wrate/ot_oracle.hpp"

using namespace wrate;
using wrate::testing::CloudShape;
using wrate::testing::NaiveDp;

namespace {

DiscreteMeasure dirac(double x) { return DiscreteMeasure::dirac({x}); }

double kappa_oracle(double p, double d) {
    return std::pow(2.0, p * (1.0 + d / 2.0)) * (std::pow(2.0, p) + 1.0) / (std::pow(2.0, p) - 1.0);
}

// Exact D_p of grid-snapped measures: levels 1..40 by NaiveDp, then the
// constant post-separation level sum continued geometrically.
double naive_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
    const double a = NaiveDp(mu.dim(), p, 40).noncompact(mu, nu);
    const double b = NaiveDp(mu.dim(), p, 41).noncompact(mu, nu);
    // b - a is the level-41 term; every later level repeats it scaled by 2^{-p}
    return a + (b - a) / (1.0 - std::pow(2.0, -p));
}

// Levels past L add at most 2^{-pL} per unit of matched shell mass.
double tail_allowance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, std::size_t depth) {
    std::map<int, std::pair<double, double>> shells;
    for (std::size_t i = 0; i < mu.size(); ++i) shells[NaiveDp::shell_of(mu.point(i))].first += mu.weight(i);
    for (std::size_t i = 0; i < nu.size(); ++i) shells[NaiveDp::shell_of(nu.point(i))].second += nu.weight(i);
    double total = 0.0;
    for (const auto& [n, m] : shells)
        total += std::pow(2.0, p * n) * std::min(m.first, m.second) * std::pow(2.0, -p * static_cast<double>(depth));
    return total;
}

// Atoms outside the unit cube: at least one coordinate pushed beyond 1 in absolute value.
DiscreteMeasure outer_cloud(Rng& rng, std::size_t dim, std::size_t max_atoms) {
    const std::size_t n = 1 + rng.below(max_atoms);
    std::vector<double> coords(n * dim), weights(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < dim; ++k) coords[i * dim + k] = std::round((2.0 * rng.uniform() - 1.0) * 256.0) / 64.0;
        const std::size_t k = rng.below(dim);
        const double mag = 1.0 + std::round(rng.uniform() * 512.0) / 64.0 + 1.0 / 64.0;
        coords[i * dim + k] = rng.uniform() < 0.5 ? -mag : mag;
        weights[i] = 0.1 + rng.uniform();
    }
    return DiscreteMeasure(dim, std::move(coords), std::move(weights));
}

// D_p of a 1-D discrete measure against a symmetric law given by its survival
// function S(x) = P(X > x), x >= 0; levels 1..depth, shells 0..n_last, cells
// enumerated explicitly. Masses use S on both sides, avoiding 1 - S cancellation.
double naive_vs_law(const DiscreteMeasure& mu, const std::function<double(double)>& sf, double p,
                    std::size_t depth, int n_last) {
    auto mass = [&](double a, double b) {  // (a, b]
        if (a >= 0.0) return sf(a) - sf(b);
        if (b <= 0.0) return sf(-b) - sf(-a);
        return (0.5 - sf(-a)) + (0.5 - sf(b));
    };
    double total = 0.0;
    for (int n = 0; n <= n_last; ++n) {
        const double r = std::ldexp(1.0, n);
        const double inner = n == 0 ? 0.0 : r / 2.0;
        const double nu_b = n == 0 ? mass(-1.0, 1.0) : mass(-r, -inner) + mass(inner, r);
        double mu_b = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (NaiveDp::shell_of(mu.point(i)) == n) mu_b += mu.weight(i);
        double term = std::abs(mu_b - nu_b);
        if (mu_b > 0.0 && nu_b > 0.0) {
            double sum = 0.0;
            for (std::size_t l = 1; l <= depth; ++l) {
                const long cells = 1L << l;
                const double h = 2.0 * r / static_cast<double>(cells);
                std::map<long, double> mu_cells;
                for (std::size_t i = 0; i < mu.size(); ++i)
                    if (NaiveDp::shell_of(mu.point(i)) == n)
                        mu_cells[NaiveDp::cell_of(mu.point(i)[0] / r, l)] += mu.weight(i) / mu_b;
                double level = 0.0;
                for (long k = 0; k < cells; ++k) {
                    double a = -r + k * h, b = a + h;
                    double m = 0.0;
                    // restrict the cell to the shell (drop the inner cube)
                    if (n == 0) {
                        m = mass(a, b);
                    } else {
                        if (a < -inner) m += mass(a, std::min(b, -inner));
                        if (b > inner) m += mass(std::max(a, inner), b);
                    }
                    const auto it = mu_cells.find(k);
                    level += std::abs((it == mu_cells.end() ? 0.0 : it->second) - m / nu_b);
                }
                sum += std::pow(2.0, -p * static_cast<double>(l)) * level;
            }
            term += std::min(mu_b, nu_b) * (std::pow(2.0, p) - 1.0) / 2.0 * sum;
        }
        total += std::pow(2.0, p * n) * term;
    }
    return total;
}

}  // namespace

TEST_CASE("kappa matches its closed form") {
    CHECK(dyadic::kappa(1.0, 2) == doctest::Approx(12.0).epsilon(1e-15));
    CHECK(dyadic::kappa(1.0, 1) == doctest::Approx(8.485281374238571).epsilon(1e-14));
    CHECK(dyadic::kappa(2.0, 2) == doctest::Approx(80.0 / 3.0).epsilon(1e-14));
    for (double p : {0.3, 0.5, 1.0, 1.7, 2.0, 3.0})
        for (std::size_t d = 1; d <= 5; ++d)
            CHECK(dyadic::kappa(p, d) == doctest::Approx(kappa_oracle(p, static_cast<double>(d))).epsilon(1e-14));
}

TEST_CASE("depth defaults") {
    CHECK(dyadic::default_depth(1) == 24);
    CHECK(dyadic::default_depth(2) == 24);
    CHECK(dyadic::default_depth(3) == 16);
    CHECK(dyadic::default_depth(5) == 10);
    for (std::size_t d = 1; d <= 8; ++d) CHECK(dyadic::default_depth(d) <= dyadic::max_depth(d));
}

TEST_CASE("shells and cells are right-closed") {
    auto shell = [](double x) { return dyadic::shell_index(std::span<const double>(&x, 1)); };
    CHECK(shell(0.0) == 0);
    CHECK(shell(1.0) == 0);
    CHECK(shell(-1.0) == 1);
    CHECK(shell(2.0) == 1);
    CHECK(shell(std::nextafter(2.0, 3.0)) == 2);
    CHECK(shell(-2.0) == 2);
    CHECK(shell(3.0) == 2);
    CHECK(shell(-0.999) == 0);
    const double v[] = {0.5, -3.0};
    CHECK(dyadic::shell_index(v) == 2);

    CHECK(dyadic::axis_cell_index(0.0, 1) == 0);
    CHECK(dyadic::axis_cell_index(1.0, 1) == 1);
    CHECK(dyadic::axis_cell_index(std::nextafter(-1.0, 0.0), 3) == 0);
    CHECK(dyadic::axis_cell_index(-0.75, 3) == 0);
    CHECK(dyadic::axis_cell_index(std::nextafter(-0.75, 0.0), 3) == 1);

    Rng rng(21);
    for (int k = 0; k < 5000; ++k) {
        double x = 2.0 * rng.uniform() - 1.0;
        if (k % 3 == 0) x = std::round(x * 256.0) / 256.0;
        if (x <= -1.0) continue;
        const std::size_t l = 1 + rng.below(30);
        CHECK(dyadic::axis_cell_index(x, l) == static_cast<std::uint64_t>(NaiveDp::cell_of(x, l)));
        const double y = x * std::pow(2.0, static_cast<double>(rng.below(10)));
        CHECK(shell(y) == NaiveDp::shell_of(std::span<const double>(&y, 1)));
    }

    const std::uint64_t code = 0b10'01'11;  // level 3, d = 2
    const auto axes = dyadic::decode_cell(code, 3, 2);
    CHECK(axes[0] == 0b101);
    CHECK(axes[1] == 0b011);
}

TEST_CASE("dp_compact worked values") {
    Rng rng(22);
    const auto m = testing::random_cloud(rng, CloudShape{2, 10, 1.0});
    CHECK(dyadic::dp_compact(m, m, 1.0, 24).value == 0.0);
    const auto a = dyadic::dp_compact(dirac(0.5), dirac(-0.5), 1.0, 24);
    CHECK(a.value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a.truncation_bound == 0.0);
    const auto b = dyadic::dp_compact(dirac(0.25), dirac(0.75), 1.0, 24);
    CHECK(b.value == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(b.truncation_bound == 0.0);
    CHECK_THROWS_AS(dyadic::dp_compact(dirac(1.5), dirac(0.0), 1.0, 24), std::invalid_argument);
    CHECK_THROWS_AS(dyadic::dp_compact(dirac(0.5), dirac(0.0), 1.0, 0), std::invalid_argument);
}

TEST_CASE("dp_noncompact worked values") {
    const auto a = dyadic::dp_noncompact(dirac(0.5), dirac(3.0), 1.0, 24);
    CHECK(a.value == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(a.truncation_bound == 0.0);

    Rng rng(23);
    for (int k = 0; k < 100; ++k) {
        const CloudShape shape{1 + rng.below(3), 12, 1.0};
        const auto mu = testing::random_cloud(rng, shape), nu = testing::random_cloud(rng, shape);
        const auto c = dyadic::dp_compact(mu, nu, 1.0, 12), n = dyadic::dp_noncompact(mu, nu, 1.0, 12);
        CHECK(std::abs(c.value - n.value) <= 1e-12);
        CHECK(std::abs(c.truncation_bound - n.truncation_bound) <= 1e-12);
    }
}

TEST_CASE("dp_noncompact agrees with the straight evaluation") {
    Rng rng(24);
    for (int k = 0; k < 150; ++k) {
        const std::size_t d = 1 + rng.below(3);
        const double p = k % 3 == 0 ? 0.5 : (k % 3 == 1 ? 1.0 : 2.0);
        const CloudShape shape{d, 10, 2.0, k % 2 == 0, true};
        const auto mu = testing::random_cloud(rng, shape), nu = testing::random_cloud(rng, shape);
        const auto got = dyadic::dp_noncompact(mu, nu, p, dyadic::default_depth(d));
        const double want = naive_exact(mu, nu, p);
        CHECK(got.truncation_bound == 0.0);
        CHECK(got.value == doctest::Approx(want).epsilon(1e-10));
    }
    // unsnapped atoms: partial sums at the same depth bracket the implementation
    for (int k = 0; k < 100; ++k) {
        const std::size_t d = 1 + rng.below(2);
        const double p = k % 2 == 0 ? 1.0 : 2.0;
        const CloudShape shape{d, 10, 3.0, k % 3 == 0};
        const auto mu = testing::random_cloud(rng, shape), nu = testing::random_cloud(rng, shape);
        const auto got = dyadic::dp_noncompact(mu, nu, p, 8);
        const double partial = NaiveDp(d, p, 8).noncompact(mu, nu);
        const double allowance = tail_allowance(mu, nu, p, 8);
        CHECK(got.value >= partial - 1e-12 * (1.0 + partial));
        CHECK(got.value <= partial + allowance + 1e-12 * (1.0 + partial));
        CHECK(got.truncation_bound <= allowance * (1.0 + 1e-12));
    }
}

TEST_CASE("dp against reference laws agrees with explicit cell enumeration") {
    Rng rng(25);
    const std::size_t depth = 9;
    const auto cube = ReferenceMeasure::uniform_cube(1);
    const auto gauss = ReferenceMeasure::gaussian({0.0}, {1.0});
    const auto pareto = ReferenceMeasure::pareto_radial(1, 2.5);
    const auto normal_sf = [](double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); };
    const auto pareto_sf = [](double x) { return x < 1.0 ? 0.5 : 0.5 * std::pow(x, -2.5); };
    const auto cube_sf = [](double x) { return std::max(0.0, (1.0 - x) / 2.0); };
    for (double p : {0.5, 1.0, 2.0}) {
        for (int k = 0; k < 4; ++k) {
            const auto mu_c = empirical(1, cube.sample(40, rng));
            const auto got_c = dyadic::dp_noncompact(mu_c, cube, p, depth);
            CHECK(got_c.value == doctest::Approx(naive_vs_law(mu_c, cube_sf, p, depth, 0)).epsilon(1e-10));
            const auto cc = dyadic::dp_compact(mu_c, cube, p, depth);
            CHECK(cc.value == doctest::Approx(got_c.value).epsilon(1e-12));
            CHECK(cc.truncation_bound == doctest::Approx(std::pow(2.0, -p * depth)).epsilon(1e-12));

            const auto mu_g = empirical(1, gauss.sample(40, rng));
            const auto got_g = dyadic::dp_noncompact(mu_g, gauss, p, depth);
            CHECK(got_g.value == doctest::Approx(naive_vs_law(mu_g, normal_sf, p, depth, 7)).epsilon(1e-9));

            const auto mu_p = empirical(1, pareto.sample(40, rng));
            const auto got_p = dyadic::dp_noncompact(mu_p, pareto, p, depth);
            if (p < 2.5) {
                // shells past the last atom add 2^{pn} nu(B_n), a convergent tail
                const double want = naive_vs_law(mu_p, pareto_sf, p, depth, 150);
                CHECK(got_p.value <= want * (1.0 + 1e-9));
                CHECK(got_p.value + got_p.truncation_bound >= want * (1.0 - 1e-9));
            }
        }
    }
}

TEST_CASE("account invariants") {
    Rng rng(26);
    for (int k = 0; k < 100; ++k) {
        const std::size_t d = 1 + rng.below(3);
        const CloudShape shape{d, 30, 2.0, k % 2 == 0, k % 3 == 0};
        const auto mu = testing::random_cloud(rng, shape), nu = testing::random_cloud(rng, shape);
        const std::size_t depth = dyadic::default_depth(d);
        const auto acc = dyadic::build_account(mu, nu, depth);
        CHECK(acc.dim == d);
        double mu_total = 0.0, nu_total = 0.0;
        for (const auto& shell : acc.shells) {
            mu_total += shell.mu_mass;
            nu_total += shell.nu_mass;
            for (std::size_t l = 1; l <= shell.levels.size(); ++l) {
                const auto& level = shell.levels[l - 1];
                double sm = 0.0, sn = 0.0;
                for (const auto& c : level.cells) {
                    CHECK(c.code < (std::uint64_t{1} << (l * d)));
                    sm += c.mu;
                    sn += c.nu;
                }
                CHECK(std::abs(sm - shell.mu_mass) <= 1e-12);
                CHECK(std::abs(sn - shell.nu_mass) <= 1e-12);
                if (l < shell.levels.size()) {
                    std::map<std::uint64_t, std::pair<double, double>> from_children;
                    for (const auto& c : shell.levels[l].cells) {
                        from_children[c.code >> d].first += c.mu;
                        from_children[c.code >> d].second += c.nu;
                    }
                    CHECK(from_children.size() == level.cells.size());
                    for (const auto& c : level.cells) {
                        CHECK(std::abs(from_children[c.code].first - c.mu) <= 1e-12);
                        CHECK(std::abs(from_children[c.code].second - c.nu) <= 1e-12);
                    }
                }
            }
        }
        CHECK(std::abs(mu_total - 1.0) <= 1e-12);
        CHECK(std::abs(nu_total - 1.0) <= 1e-12);
        const auto direct = dyadic::dp_noncompact(mu, nu, 1.0, depth);
        CHECK(dyadic::dp_from_account(acc, 1.0).value == doctest::Approx(direct.value).epsilon(1e-14));
    }
}

TEST_CASE("compact distance is a bounded metric") {
    Rng rng(27);
    for (int k = 0; k < 200; ++k) {
        const std::size_t d = 1 + rng.below(3);
        const double p = k % 3 == 0 ? 0.5 : (k % 3 == 1 ? 1.0 : 2.0);
        const CloudShape shape{d, 12, 0.98, false, true};
        const auto a = testing::random_cloud(rng, shape), b = testing::random_cloud(rng, shape),
                   c = testing::random_cloud(rng, shape);
        const std::size_t depth = dyadic::default_depth(d);
        const auto ab = dyadic::dp_compact(a, b, p, depth), ba = dyadic::dp_compact(b, a, p, depth);
        const auto bc = dyadic::dp_compact(b, c, p, depth), ac = dyadic::dp_compact(a, c, p, depth);
        CHECK(ab.value == ba.value);
        CHECK(ac.value <= ab.value + bc.value + 1e-10);
        CHECK(ab.value + ab.truncation_bound <= 1.0 + 1e-12);
        CHECK(dyadic::dp_noncompact(a, b, p, depth).value == dyadic::dp_noncompact(b, a, p, depth).value);
    }
}

TEST_CASE("partial sums grow with depth and stay under the previous bound") {
    Rng rng(28);
    for (int k = 0; k < 100; ++k) {
        const std::size_t d = 1 + rng.below(2);
        const double p = k % 2 == 0 ? 0.7 : 1.5;
        const CloudShape shape{d, 20, 1.0};
        const auto a = testing::random_cloud(rng, shape), b = testing::random_cloud(rng, shape);
        std::vector<dyadic::DpResult> r;
        for (std::size_t l = 1; l <= 20; ++l) r.push_back(dyadic::dp_compact(a, b, p, l));
        for (std::size_t i = 0; i < r.size(); ++i) {
            for (std::size_t j = i + 1; j < r.size(); ++j) {
                CHECK(r[j].value >= r[i].value - 1e-15);
                CHECK(r[i].value + r[i].truncation_bound >= r[j].value + r[j].truncation_bound - 1e-12);
            }
        }
    }
}

TEST_CASE("flattened sum") {
    const auto first = dyadic::flattened_bound(dirac(0.5), dirac(-0.5), 1.0, 1);
    CHECK(first.partial == doctest::Approx(1.0).epsilon(1e-15));
    Rng rng(29);
    const auto m = testing::random_cloud(rng, CloudShape{2, 10, 3.0});
    CHECK(dyadic::flattened_bound(m, m, 1.0, 24).total() == 0.0);

    CHECK(dyadic::flattened_constant(1.0) == 1.0);
    CHECK(dyadic::flattened_constant(0.5) == 1.0);
    CHECK(dyadic::flattened_constant(2.0) == doctest::Approx(1.5));

    for (int k = 0; k < 200; ++k) {
        const std::size_t d = 1 + rng.below(3);
        const double p = k % 3 == 0 ? 0.5 : (k % 3 == 1 ? 1.0 : 2.0);
        const CloudShape shape{d, 16, 2.0, k % 2 == 0, k % 4 == 0};
        const auto mu = testing::random_cloud(rng, shape), nu = testing::random_cloud(rng, shape);
        const std::size_t depth = dyadic::default_depth(d);
        const auto dp = dyadic::dp_noncompact(mu, nu, p, depth);
        const auto rf = dyadic::flattened_bound(mu, nu, p, depth);
        CHECK(dp.value <= dyadic::flattened_constant(p) * rf.total() * (1.0 + 1e-12));
        if (p <= 1.0) CHECK(dp.value <= rf.total() * (1.0 + 1e-12));
    }
    // Doubling moves every atom outside the unit cube one shell out and
    // scales both sums by 2^p. Atoms inside (-1/2, 1/2]^d would stay in B_0.
    for (int k = 0; k < 200; ++k) {
        const std::size_t d = 1 + rng.below(3);
        const double p = k % 3 == 0 ? 0.5 : (k % 3 == 1 ? 1.0 : 2.0);
        const auto mu = outer_cloud(rng, d, 12), nu = outer_cloud(rng, d, 12);
        const std::size_t depth = dyadic::default_depth(d);
        const auto rf = dyadic::flattened_bound(mu, nu, p, depth);
        const auto rf2 = dyadic::flattened_bound(mu.scaled(2.0), nu.scaled(2.0), p, depth);
        CHECK(rf.tail_exact);
        CHECK(rf2.total() == doctest::Approx(std::pow(2.0, p) * rf.total()).epsilon(1e-12));
        const auto dp = dyadic::dp_noncompact(mu, nu, p, depth);
        const auto dp2 = dyadic::dp_noncompact(mu.scaled(2.0), nu.scaled(2.0), p, depth);
        CHECK(dp2.value == doctest::Approx(std::pow(2.0, p) * dp.value).epsilon(1e-12));
    }
}

TEST_CASE("dominance on random pairs") {
    Rng rng(30);
    for (int k = 0; k < 300; ++k) {
        const std::size_t d = 1 + rng.below(3);
        const double p = k % 3 == 0 ? 0.5 : (k % 3 == 1 ? 1.0 : 2.0);
        const CloudShape shape{d, 24, 1.0 + 4.0 * rng.uniform(), k % 2 == 0, k % 5 == 0};
        const auto mu = testing::random_cloud(rng, shape), nu = testing::random_cloud(rng, shape);
        const auto dp = dyadic::dp_noncompact(mu, nu, p, dyadic::default_depth(d));
        CHECK(wexact_discrete(mu, nu, {p}).value <= dyadic::kappa(p, d) * (dp.value + dp.truncation_bound));
    }
}

TEST_CASE("explicit coupling") {
    Rng rng(31);
    const auto m = testing::random_cloud(rng, CloudShape{2, 10, 3.0});
    const auto id = dyadic::build_coupling(m, m, 1.0, 24);
    CHECK(id.cost_p == 0.0);
    CHECK(id.entries.size() == m.size());
    for (const auto& e : id.entries) CHECK(e.source == e.target);

    const auto one = dyadic::build_coupling(dirac(0.25), dirac(0.75), 1.0, 24);
    REQUIRE(one.entries.size() == 1);
    CHECK(one.entries[0].mass == 1.0);
    CHECK(one.cost_p == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(one.cost_p <= dyadic::kappa(1.0, 1) * 0.5);

    for (int k = 0; k < 500; ++k) {
        const std::size_t d = 1 + rng.below(3);
        const double p = k % 2 == 0 ? 1.0 : 2.0;
        const CloudShape shape{d, 32, 1.0 + 3.0 * rng.uniform(), k % 3 == 0, k % 4 == 0, k % 5 == 0};
        const auto mu = testing::random_cloud(rng, shape), nu = testing::random_cloud(rng, shape);
        const std::size_t depth = dyadic::default_depth(d);
        const auto plan = dyadic::build_coupling(mu, nu, p, depth);
        std::vector<double> rows(mu.size(), 0.0), cols(nu.size(), 0.0);
        double cost = 0.0;
        for (const auto& e : plan.entries) {
            CHECK(e.mass >= 0.0);
            rows[e.source] += e.mass;
            cols[e.target] += e.mass;
            cost += e.mass * testing::lp_cost(mu.point(e.source), nu.point(e.target), p);
        }
        for (std::size_t i = 0; i < mu.size(); ++i) CHECK(std::abs(rows[i] - mu.weight(i)) <= 1e-9);
        for (std::size_t j = 0; j < nu.size(); ++j) CHECK(std::abs(cols[j] - nu.weight(j)) <= 1e-9);
        CHECK(plan.cost_p == doctest::Approx(cost).epsilon(1e-9));
        const auto dp = dyadic::dp_noncompact(mu, nu, p, depth);
        CHECK(plan.cost_p <= dyadic::kappa(p, d) * (dp.value + dp.truncation_bound));
        CHECK(plan.cost_p >= wexact_discrete(mu, nu, {p}).value - 1e-12);
    }
    CHECK_THROWS_AS(dyadic::build_coupling(dirac(0.1), DiscreteMeasure::dirac({0.1, 0.2}), 1.0, 24),
                    std::invalid_argument);
}
