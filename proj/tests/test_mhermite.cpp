#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dyson/multiple_hermite.hpp"
#include "dyson/quadrature.hpp"
#include "dyson/special.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace dyson;
using Complex = std::complex<double>;

namespace {
Configuration pts(std::initializer_list<double> xs) {
    std::vector<Atom> a;
    for (double x : xs) a.push_back({x, 1});
    return Configuration::finite(std::move(a));
}
}  // namespace

TEST_CASE("type-II polynomial closed forms") {
    // one point: monic linear with root shifted to the mean
    for (double a : {-0.7, 0.0, 1.3})
        for (double y : {-2.0, 0.4, 3.1})
            CHECK(type2_poly(pts({a}), y) == doctest::Approx(y - a).epsilon(1e-12));

    // two points: (y-a)(y-b) - 1
    double a = -0.5, b = 0.5;
    for (double y : {-1.2, 0.0, 0.8, 2.5})
        CHECK(type2_poly(pts({a, b}), y) ==
              doctest::Approx((y - a) * (y - b) - 1.0).epsilon(1e-11));

    // N coincident points at 0: 2^{-N/2} H_N(y / sqrt 2)
    for (int N = 1; N <= 4; ++N) {
        auto xi = Configuration::finite({{0.0, N}});
        for (double y : {-1.1, 0.3, 1.9}) {
            double expect = std::pow(2.0, -0.5 * N) * hermite<double>(N, y / std::sqrt(2.0));
            CHECK(type2_poly(xi, y) == doctest::Approx(expect).epsilon(1e-10));
        }
    }

    // complex argument agrees with the real overload on the real axis
    Complex pc = type2_poly(pts({-1.0, 0.2, 0.9}), Complex(0.55, 0.0));
    CHECK(std::abs(pc.imag()) < 1e-10);
    CHECK(pc.real() == doctest::Approx(type2_poly(pts({-1.0, 0.2, 0.9}), 0.55)).epsilon(1e-12));

    CHECK_THROWS_AS(type2_poly(Configuration::lattice(), 0.0), precondition_violation);
}

TEST_CASE("type-II polynomial is monic of full degree") {
    // N-th forward difference at step 1 divided by N! extracts the leading coefficient
    for (auto& xi : {pts({0.4}), pts({-0.5, 0.5}), pts({-1.0, 0.2, 0.9}),
                     Configuration::finite({{0.0, 2}, {1.0, 1}})}) {
        int N = int(xi.total_count());
        double lead = 0.0;
        for (int k = 0; k <= N; ++k)
            lead += ((N - k) % 2 ? -1.0 : 1.0) * binomial(N, k) * type2_poly(xi, double(k));
        lead /= factorial(N);
        CHECK(lead == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("type-II orthogonality against Gaussian weights at support points") {
    auto xi = Configuration::finite({{0.0, 2}, {1.0, 1}});
    auto resid = [&](double x, int j) {
        auto r = integrate_adaptive(
            [&](double y) { return type2_poly(xi, y) * std::pow(y, j) * std::exp(-0.5 * (y - x) * (y - x)); },
            -14.0, 15.0, 1e-12, 1e-12);
        return r.value;
    };
    CHECK(std::abs(resid(0.0, 0)) < 1e-8);
    CHECK(std::abs(resid(0.0, 1)) < 1e-8);
    CHECK(std::abs(resid(1.0, 0)) < 1e-8);
}

TEST_CASE("type-I function closed forms and moments") {
    // one point: Gaussian density
    for (double y : {-1.5, 0.0, 0.8})
        CHECK(type1_fn(pts({0.7}), y) ==
              doctest::Approx(std::exp(-0.5 * (y - 0.7) * (y - 0.7)) / std::sqrt(2 * M_PI))
                  .epsilon(1e-10));

    // N coincident points: Hermite times Gaussian with the moment-normalizing constant
    for (int N = 2; N <= 4; ++N) {
        auto xi = Configuration::finite({{0.0, N}});
        int j = N - 1;
        for (double y : {-0.9, 0.25, 1.6}) {
            double expect = std::pow(2.0, -0.5 * j) / (factorial(j) * std::sqrt(2 * M_PI)) *
                            hermite<double>(j, y / std::sqrt(2.0)) * std::exp(-0.5 * y * y);
            CHECK(type1_fn(xi, y) == doctest::Approx(expect).epsilon(1e-9));
        }
    }

    // moment ladder: 0 up to degree N-2, then 1
    auto xi = pts({-1.0, 0.2, 0.9});
    for (int j = 0; j <= 2; ++j) {
        auto m = integrate_adaptive([&](double y) { return type1_fn(xi, y) * std::pow(y, j); },
                                    -14.0, 14.0, 1e-12, 1e-12);
        CHECK(std::abs(m.value - (j == 2 ? 1.0 : 0.0)) < 1e-8);
    }
}

TEST_CASE("basis prefixes and biorthonormality") {
    auto b = MultiHermiteBasis::from_config(pts({-1.0, 0.2, 0.9}));
    CHECK(b.N == 3);
    CHECK(b.prefix(0).total_count() == 0);
    CHECK(b.prefix(2).total_count() == 2);

    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
            double v = biorth_pair(b, j, k);
            CHECK(std::abs(v - (j == k ? 1.0 : 0.0)) < 1e-8);
        }

    auto b1 = MultiHermiteBasis::from_config(pts({0.0}));
    CHECK(biorth_pair(b1, 0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS_AS(biorth_pair(b1, 0, 1), invalid_parameter);
}

TEST_CASE("vandermonde product sign convention") {
    CHECK(a_delta({0.0, 1.0}) == -1.0);
    CHECK(a_delta({0.0, 1.0, 3.0}) == doctest::Approx((0 - 1.0) * (0 - 3.0) * (1.0 - 3.0)));
    CHECK(a_delta({2.0}) == 1.0);
}

TEST_CASE("determinant identity on simple and confluent inputs") {
    // N=2, x=(0,1), y=(0.3,1.7): both sides, lhs checked independently
    auto b2 = MultiHermiteBasis::from_config(pts({0.0, 1.0}));
    auto r2 = det_identity_check(b2, {0.3, 1.7});
    double g = [](double u) { return std::exp(-0.5 * u * u); }(0.0);
    (void)g;
    auto gau = [](double d) { return std::exp(-0.5 * d * d); };
    double lhs_manual = (gau(0.3 - 0.0) * gau(1.7 - 1.0) - gau(1.7 - 0.0) * gau(0.3 - 1.0)) /
                        a_delta({0.0, 1.0});
    CHECK(r2.lhs == doctest::Approx(lhs_manual).epsilon(1e-12));
    CHECK(r2.lhs == doctest::Approx(r2.rhs).epsilon(1e-10));

    // N=1: e^{-(y-x)^2/2} = sqrt(2 pi) Q_{delta_x}(y)
    auto b1 = MultiHermiteBasis::from_config(pts({0.4}));
    auto r1 = det_identity_check(b1, {1.1});
    CHECK(r1.lhs == doctest::Approx(gau(1.1 - 0.4)).epsilon(1e-12));
    CHECK(r1.lhs == doctest::Approx(r1.rhs).epsilon(1e-10));

    // confluent N=3 with a double point
    auto b3 = MultiHermiteBasis::from_config(Configuration::finite({{0.0, 2}, {1.0, 1}}));
    auto r3 = det_identity_check(b3, {0.3, 0.9, 1.7});
    CHECK(r3.lhs == doctest::Approx(r3.rhs).epsilon(1e-8));
}

TEST_CASE("time-scaled families reduce to the static ones at t=1") {
    auto b = MultiHermiteBasis::from_config(pts({-0.5, 0.5}));
    for (int j = 0; j < 2; ++j)
        for (double x : {-0.8, 0.1, 1.4}) {
            CHECK(phi_minus(1.0, x, j, b) == doctest::Approx(h_minus(b, j, x)).epsilon(1e-11));
            CHECK(phi_plus(1.0, x, j, b) == doctest::Approx(h_plus(b, j, x)).epsilon(1e-11));
        }
    CHECK_THROWS_AS(phi_minus(0.0, 0.0, 0, b), invalid_parameter);
    CHECK_THROWS_AS(phi_plus(-0.5, 0.0, 0, b), invalid_parameter);
}

TEST_CASE("heat flow intertwines the scaled families") {
    auto b = MultiHermiteBasis::from_config(pts({-0.5, 0.5}));
    double t1 = 0.4, t2 = 1.0, dt = t2 - t1;
    auto rule = hermite_rule(64);
    for (int j = 0; j < 2; ++j) {
        for (double x1 : {-0.6, 0.9}) {
            // backward: integrate phi_minus(t2) against the transition density
            double acc = 0.0;
            for (size_t i = 0; i < rule.x.size(); ++i)
                acc += rule.w[i] * phi_minus(t2, x1 + std::sqrt(2.0 * dt) * rule.x[i], j, b);
            acc /= std::sqrt(M_PI);
            CHECK(std::abs(acc - phi_minus(t1, x1, j, b)) < 1e-7);
        }
        for (double x2 : {-0.6, 0.9}) {
            // forward: propagate phi_plus(t1) to t2
            auto r = integrate_adaptive(
                [&](double x1v) { return heat_kernel(dt, x2, x1v) * phi_plus(t1, x1v, j, b); },
                -16.0, 16.0, 1e-11, 1e-11);
            CHECK(std::abs(r.value - phi_plus(t2, x2, j, b)) < 1e-7);
        }
    }
}

TEST_CASE("initial determinant weights") {
    // mu_minus equals the Vandermonde of the evaluation points at any t
    auto b = MultiHermiteBasis::from_config(pts({-1.0, 0.2, 0.9}));
    std::vector<double> xs{-0.4, 0.5, 1.3};
    double vand = (xs[1] - xs[0]) * (xs[2] - xs[0]) * (xs[2] - xs[1]);
    for (double t : {0.3, 0.7}) CHECK(mu_minus(b, t, xs) == doctest::Approx(vand).epsilon(1e-9));

    // mu_plus of a single particle is its transition density
    auto b1 = MultiHermiteBasis::from_config(pts({0.0}));
    double t = 0.6, x = 0.8;
    CHECK(mu_plus(b1, t, {x}) == doctest::Approx(heat_kernel(t, x, 0.0)).epsilon(1e-9));
}
