// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "support.hpp"
#include "wrate/errors.hpp"
#include "wrate/measures.hpp"
#include "wrate/pointcloud_io.hpp"
#include "wrate/rng.hpp"

using namespace wrate;

namespace {

// Midpoint rule for int_1^inf x^s q x^{-q-1} dx after x = 1/t.
double pareto_abs_moment_numeric(double q, double s) {
    constexpr int m = 200000;
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
        const double t = (i + 0.5) / m;
        sum += q * std::pow(t, q - s - 1.0);
    }
    return sum / m;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("empirical builds uniform weights and merges duplicates") {
    const auto one = empirical(1, {0.0});
    CHECK(one.size() == 1);
    CHECK(one.point(0)[0] == 0.0);
    CHECK(one.weight(0) == 1.0);

    const auto merged = empirical(1, {0.5, 0.5, -0.5});
    REQUIRE(merged.size() == 2);
    CHECK(merged.point(0)[0] == -0.5);
    CHECK(merged.weight(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(merged.point(1)[0] == 0.5);
    CHECK(merged.weight(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    Rng rng(7);
    const auto cube = ReferenceMeasure::uniform_cube(2);
    const auto m = empirical(2, cube.sample(1000, rng));
    CHECK(m.size() == 1000);
    double total = 0.0;
    for (double w : m.weights()) {
        CHECK(w == doctest::Approx(1e-3).epsilon(1e-12));
        total += w;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("empirical and constructor reject bad input") {
    CHECK_THROWS_AS(empirical(1, {}), std::invalid_argument);
    CHECK_THROWS_AS(empirical(2, {0.1, 0.2, 0.3}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteMeasure(1, {0.0, 1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteMeasure(1, {0.0}, {-1.0}), std::invalid_argument);
    const DiscreteMeasure dropped(1, {0.0, 1.0, 2.0}, {0.5, 0.0, 0.5});
    CHECK(dropped.size() == 2);
}

TEST_CASE("moment of discrete and reference measures") {
    CHECK(moment(DiscreteMeasure::dirac({0.0}), 1.0) == 0.0);
    CHECK(moment(DiscreteMeasure::dirac({0.0, 0.0}), 3.7) == 0.0);
    const DiscreteMeasure pm(1, {-1.0, 1.0}, {0.5, 0.5});
    CHECK(moment(pm, 2.0) == doctest::Approx(1.0).epsilon(1e-15));

    const auto par = ReferenceMeasure::pareto_radial(1, 3.0);
    const double oracle = pareto_abs_moment_numeric(3.0, 1.0);
    CHECK(oracle == doctest::Approx(1.5).epsilon(1e-4));
    CHECK(moment(par, 1.0) == doctest::Approx(oracle).epsilon(1e-4));
    CHECK(moment(par, 2.0) == doctest::Approx(pareto_abs_moment_numeric(3.0, 2.0)).epsilon(1e-3));
    CHECK_THROWS(moment(par, 3.0));
    CHECK(std::isinf(par.moment_order_finite()) == false);

    // uniform on (-1,1]: E|x| = 1/2, E x^2 = 1/3; in d = 2 E|x|^2 = 2/3
    CHECK(moment(ReferenceMeasure::uniform_cube(1), 1.0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(moment(ReferenceMeasure::uniform_cube(1), 2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(moment(ReferenceMeasure::uniform_cube(2), 2.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
    // standard normal: E|x| = sqrt(2/pi), E x^4 = 3
    const auto g = ReferenceMeasure::gaussian({0.0}, {1.0});
    CHECK(moment(g, 1.0) == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-10));
    CHECK(moment(g, 4.0) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(std::isinf(g.moment_order_finite()));
}

TEST_CASE("moment is homogeneous under scaling") {
    Rng rng(11);
    for (int k = 0; k < 200; ++k) {
        testing::CloudShape shape{1 + rng.below(3), 20, 3.0, k % 2 == 0};
        const auto m = testing::random_cloud(rng, shape);
        const double s = 0.1 + 5.0 * rng.uniform();
        const double q = 0.2 + 4.0 * rng.uniform();
        const double base = moment(m, q);
        CHECK(moment(m.scaled(s), q) == doctest::Approx(std::pow(s, q) * base).epsilon(1e-10));
    }
}

TEST_CASE("exp_moment values, overflow and Jensen") {
    CHECK(exp_moment(DiscreteMeasure::dirac({0.0}), 1.3, 0.7) == 1.0);
    CHECK(exp_moment(DiscreteMeasure::dirac({1.0}), 2.0, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
    const DiscreteMeasure two(1, {0.0, 1.0}, {0.5, 0.5});
    CHECK(exp_moment(two, 1.0, 2.0) == doctest::Approx((1.0 + std::exp(2.0)) / 2.0).epsilon(1e-14));
    CHECK(std::isinf(exp_moment(DiscreteMeasure::dirac({1e3}), 2.0, 1.0)));

    Rng rng(12);
    for (int k = 0; k < 200; ++k) {
        testing::CloudShape shape{1 + rng.below(3), 20, 2.0};
        const auto m = testing::random_cloud(rng, shape);
        const double alpha = 0.3 + 2.0 * rng.uniform(), gamma = 0.1 + rng.uniform();
        double inner = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) inner += m.weight(i) * std::pow(norm(m.point(i)), alpha);
        CHECK(exp_moment(m, alpha, gamma) >= std::exp(gamma * inner) * (1.0 - 1e-10));
    }
}

TEST_CASE("poissonized sample size has Poisson mean and variance") {
    Rng rng(13);
    constexpr int draws = 100000;
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < draws; ++i) {
        const auto k = static_cast<double>(poissonized_sample_size(50, rng));
        s += k;
        ss += k * k;
    }
    const double mean = s / draws, var = ss / draws - mean * mean;
    CHECK(mean >= 49.3);
    CHECK(mean <= 50.7);
    CHECK(var >= 47.0);
    CHECK(var <= 53.0);

    int zeros = 0;
    for (int i = 0; i < 1000; ++i) zeros += poissonized_sample_size(1, rng) == 0;
    CHECK(zeros > 250);  // P(0) = e^{-1}
    CHECK(zeros < 480);
    CHECK_THROWS_AS(poissonized_sample_size(0, rng), std::invalid_argument);
}

TEST_CASE("sample moments approach reference moments") {
    Rng rng(14);
    for (std::size_t d : {1, 2}) {
        const auto cube = ReferenceMeasure::uniform_cube(d);
        const auto m = empirical(d, cube.sample(100000, rng));
        for (double q : {1.0, 2.0}) {
            const double ref = moment(cube, q);
            CHECK(std::abs(moment(m, q) - ref) / ref < 0.05);
        }
    }
}

TEST_CASE("box masses match closed-form probabilities") {
    const auto cube = ReferenceMeasure::uniform_cube(2, 1.0);
    const double lo[] = {-0.5, 0.0}, hi[] = {0.5, 1.0};
    CHECK(cube.box_mass(lo, hi) == doctest::Approx(0.25).epsilon(1e-15));
    const double far_lo[] = {1.0, 0.0}, far_hi[] = {2.0, 1.0};
    CHECK(cube.box_mass(far_lo, far_hi) == 0.0);

    const auto g = ReferenceMeasure::gaussian({0.5, -1.0}, {4.0, 0.25});
    const double glo[] = {-1.0, -1.5}, ghi[] = {2.0, -0.75};
    const double expect = (std_normal_cdf((2.0 - 0.5) / 2.0) - std_normal_cdf((-1.0 - 0.5) / 2.0)) *
                          (std_normal_cdf((-0.75 + 1.0) / 0.5) - std_normal_cdf((-1.5 + 1.0) / 0.5));
    CHECK(g.box_mass(glo, ghi) == doctest::Approx(expect).epsilon(1e-12));

    // symmetric Pareto, q = 2: P(a < X <= b) = (a^{-2} - b^{-2}) / 2 for 1 <= a < b
    const auto par = ReferenceMeasure::pareto_radial(1, 2.0);
    const double plo[] = {2.0}, phi[] = {4.0};
    CHECK(par.box_mass(plo, phi) == doctest::Approx((0.25 - 1.0 / 16.0) / 2.0).epsilon(1e-14));
    const double mlo[] = {-0.5}, mhi[] = {0.5};
    CHECK(par.box_mass(mlo, mhi) == 0.0);

    const auto tp = ReferenceMeasure::two_point({0.0}, {1.0}, 0.3);
    const double tlo[] = {-0.5}, thi[] = {0.0};
    CHECK(tp.box_mass(tlo, thi) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("reference samplers stay on their supports") {
    Rng rng(15);
    const auto par = ReferenceMeasure::pareto_radial(3, 2.5);
    const auto pts = par.sample(2000, rng);
    for (std::size_t i = 0; i < 2000; ++i) CHECK(norm(std::span<const double>(pts.data() + 3 * i, 3)) >= 1.0);
    const auto split = ReferenceMeasure::split_support(1, 0.5);
    for (double x : split.sample(2000, rng)) CHECK(std::abs(x) >= 0.25 - 1e-15);
    CHECK(ReferenceMeasure::uniform_cube(2).supported_in_unit_cube());
    CHECK_FALSE(ReferenceMeasure::gaussian({0.0}, {1.0}).supported_in_unit_cube());
    CHECK_THROWS_AS(ReferenceMeasure::pareto_radial(1, 0.0), std::invalid_argument);
}

TEST_CASE("point cloud parsing") {
    const auto m = parse_point_cloud("x,y,weight\n0.5,0.25,3\n-0.5,1,1\n");
    REQUIRE(m.size() == 2);
    CHECK(m.dim() == 2);
    CHECK(m.weight(1) == doctest::Approx(0.75));
    const auto plain = parse_point_cloud("1.0\n2.0\n2.0\n");
    CHECK(plain.size() == 2);
    CHECK(plain.weight(1) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(parse_point_cloud("1.0,2.0\n3.0\n"), ParseError);
    CHECK_THROWS_AS(parse_point_cloud("1.0,abc\n"), ParseError);
    CHECK_THROWS_AS(parse_point_cloud(""), ParseError);
    CHECK_THROWS_AS(read_point_cloud("/nonexistent/cloud.csv"), ParseError);

    Rng rng(16);
    testing::CloudShape shape{2, 10, 3.0};
    const auto r = testing::random_cloud(rng, shape);
    const auto back = parse_point_cloud(format_point_cloud(r));
    REQUIRE(back.size() == r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(back.point(i)[0] == r.point(i)[0]);
        CHECK(back.weight(i) == doctest::Approx(r.weight(i)).epsilon(1e-14));
    }
}
