#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dyson/correlations.hpp"
#include "dyson/quadrature.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace dyson;
using Complex = std::complex<double>;

namespace {
Configuration pair_config() { return Configuration::finite({{-0.5, 1}, {0.5, 1}}); }

KernelSpec residue_spec(Configuration c) {
    KernelSpec s;
    s.family = KernelFamily::finite_residue;
    s.config = std::move(c);
    return s;
}
}  // namespace

TEST_CASE("telescoping partial-fraction identity") {
    std::vector<double> xs{-1.3, -0.2, 0.6, 1.4};
    Complex z1(0.8, 0.9), z2(-0.4, 1.2);
    Complex sum = 0.0;
    for (int k = 0; k < 4; ++k) {
        Complex num = 1.0, den = 1.0;
        for (int l = 0; l < k; ++l) num *= (z2 - xs[l]);
        for (int l = 0; l <= k; ++l) den *= (z1 - xs[l]);
        sum += num / den;
    }
    Complex prod = 1.0;
    for (double x : xs) prod *= (z2 - x) / (z1 - x);
    Complex rhs = (prod - 1.0) / (z2 - z1);
    CHECK(std::abs(sum - rhs) < 1e-10);
}

TEST_CASE("biorthogonal sum kernel matches the finite-configuration kernel") {
    auto basis = MultiHermiteBasis::from_config(pair_config());
    auto sp = residue_spec(pair_config());
    for (auto [s, x, t, y] : std::vector<std::array<double, 4>>{
             {0.5, 0.3, 0.5, -0.4}, {0.25, -0.8, 0.75, 0.6}, {0.9, 0.4, 0.3, 0.1}}) {
        double a = stilde_kernel(basis, s, x, t, y);
        double b = kernel_finite_residue(sp, {s, x}, {t, y}).value;
        CHECK(std::abs(a - b) < 1e-8);
    }
    // ordered-time correction term distinguishes the two sums
    CHECK(stilde_kernel(basis, 0.9, 0.4, 0.3, 0.1) ==
          doctest::Approx(smn_kernel(basis, 0.9, 0.4, 0.3, 0.1) - heat_kernel(0.6, 0.4, 0.1))
              .epsilon(1e-12));
}

TEST_CASE("biorthogonal sum kernel composes as a semigroup") {
    auto basis = MultiHermiteBasis::from_config(pair_config());
    double t1 = 0.3, t2 = 0.6, t3 = 0.9;
    for (double x : {-0.6, 0.4})
        for (double y : {-0.2, 0.8}) {
            auto r = integrate_adaptive(
                [&](double z) {
                    return smn_kernel(basis, t1, x, t2, z) * smn_kernel(basis, t2, z, t3, y);
                },
                -16.0, 16.0, 1e-10, 1e-10);
            CHECK(std::abs(r.value - smn_kernel(basis, t1, x, t3, y)) < 1e-7);
        }
}

TEST_CASE("transition determinant") {
    CHECK(km_determinant(0.7, {0.4}, {-0.1}) ==
          doctest::Approx(heat_kernel(0.7, 0.4, -0.1)).epsilon(1e-13));
    CHECK(km_determinant(0.5, {0.3, 0.3}, {-0.5, 0.5}) == 0.0);
    for (auto [y1, y2] : std::vector<std::pair<double, double>>{{-0.3, 0.7}, {-2.0, -1.0}, {0.1, 0.2}})
        CHECK(km_determinant(0.5, {y1, y2}, {-0.5, 0.5}) > 0.0);
}

TEST_CASE("transition determinant composes over intermediate times") {
    std::vector<double> x{-0.5, 0.5}, y{-0.3, 0.7};
    double t1 = 0.3, t2 = 0.3;
    auto outer = integrate_adaptive(
        [&](double z1) {
            auto inner = integrate_adaptive(
                [&](double z2) { return km_determinant(t1, {z1, z2}, x) * km_determinant(t2, y, {z1, z2}); },
                z1, 9.0, 1e-10, 1e-10);
            return inner.value;
        },
        -9.0, 9.0, 1e-9, 1e-9);
    CHECK(std::abs(outer.value - km_determinant(t1 + t2, y, x)) < 1e-7);
}

TEST_CASE("multitime density reductions") {
    auto b1 = MultiHermiteBasis::from_config(Configuration::finite({{0.0, 1}}));
    // single particle, single time: the heat kernel
    CHECK(multitime_density(b1, {0.5}, {{0.7}}) ==
          doctest::Approx(heat_kernel(0.5, 0.7, 0.0)).epsilon(1e-10));
    // single particle, two times: Markov product
    CHECK(multitime_density(b1, {0.3, 0.8}, {{0.2}, {0.9}}) ==
          doctest::Approx(heat_kernel(0.3, 0.2, 0.0) * heat_kernel(0.5, 0.9, 0.2)).epsilon(1e-10));

    // two particles: nonnegative on ordered samples, integrates to one
    auto b2 = MultiHermiteBasis::from_config(pair_config());
    for (auto [x1, x2] : std::vector<std::pair<double, double>>{{-1.0, 0.2}, {-0.1, 0.1}, {0.5, 2.0}})
        CHECK(multitime_density(b2, {0.5}, {{x1, x2}}) >= -1e-10);
    auto mass = integrate_adaptive(
        [&](double x1) {
            auto inner = integrate_adaptive(
                [&](double x2) { return multitime_density(b2, {0.5}, {{x1, x2}}); }, x1, 8.0,
                1e-9, 1e-9);
            return inner.value;
        },
        -8.0, 8.0, 1e-8, 1e-8);
    CHECK(std::abs(mass.value - 1.0) < 2e-3);
}

TEST_CASE("correlation determinant basics") {
    CorrelationRequest req;
    req.kernel = residue_spec(pair_config());
    req.times = {0.5};
    req.points = {{0.3}};
    CHECK(correlation_det(req) == doctest::Approx(rho1(req.kernel, 0.5, 0.3)).epsilon(1e-12));

    // repeated point collapses the determinant
    req.points = {{0.3, 0.3}};
    CHECK(std::abs(correlation_det(req)) < 1e-9);

    // permutation of points within a time slot leaves the value unchanged
    req.points = {{-0.4, 0.8}};
    double a = correlation_det(req);
    req.points = {{0.8, -0.4}};
    double b = correlation_det(req);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(a == doctest::Approx(rho2(req.kernel, 0.5, -0.4, 0.8)).epsilon(1e-12));

    // empty request is the empty product
    req.times = {};
    req.points = {};
    CHECK(correlation_det(req) == 1.0);

    req.times = {0.5, 0.25};
    req.points = {{0.0}, {0.0}};
    CHECK_THROWS_AS(correlation_det(req), invalid_parameter);
}

TEST_CASE("pair correlation marginalizes to the one-point function") {
    auto sp = residue_spec(pair_config());
    double t = 0.5;
    for (double x : {-0.3, 0.6}) {
        CHECK(rho2(sp, t, x, 0.9) == doctest::Approx(rho2(sp, t, 0.9, x)).epsilon(1e-11));
        auto marg = integrate_adaptive([&](double y) { return rho2(sp, t, x, y); }, -10.0, 10.0,
                                       1e-9, 1e-9);
        CHECK(std::abs(marg.value - rho1(sp, t, x)) < 1e-4);
    }
}

TEST_CASE("two-time correlation of a single particle") {
    auto sp = residue_spec(Configuration::finite({{0.0, 1}}));
    double t1 = 0.25, t2 = 0.5, x = 0.2, y = -0.4;
    double expect = heat_kernel(t1, x, 0.0) * heat_kernel(t2 - t1, y, x);
    CHECK(rho_two_time(sp, t1, x, t2, y) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("tabulated test functions") {
    auto f = TestFunction::indicator(-0.5, 0.5, 2.0);
    CHECK_FALSE(f.zero());
    CHECK(f.at(0.0) == 2.0);
    CHECK(f.at(0.49) == 2.0);
    CHECK(f.at(0.51) == 0.0);
    CHECK(f.at(-3.0) == 0.0);
    CHECK(TestFunction{}.zero());
}

TEST_CASE("generating function truncation") {
    GeneratingFnRequest req;
    req.config = pair_config();
    req.times = {0.5};
    req.chi = {TestFunction{}};
    CHECK(generating_fn_truncated(req) == 1.0);

    // order zero keeps only the empty term
    req.chi = {TestFunction::indicator(-0.5, 0.5, 0.3)};
    req.order = 0;
    CHECK(generating_fn_truncated(req) == 1.0);

    // small amplitude: expansion is 1 + c * int rho1 + O(c^2)
    double c = 1e-3;
    req.chi = {TestFunction::indicator(-0.5, 0.5, c)};
    req.order = 3;
    double g = generating_fn_truncated(req);
    auto sp = residue_spec(pair_config());
    auto i1 = integrate_adaptive([&](double x) { return rho1(sp, 0.5, x); }, -0.5, 0.5, 1e-11, 1e-11);
    CHECK(std::abs(g - (1.0 + c * i1.value)) < 1e-5);
    CHECK(g > 1.0);

    req.order = 7;
    CHECK_THROWS_AS(generating_fn_truncated(req), invalid_parameter);
    req.order = 2;
    req.chi = {TestFunction::indicator(-0.5, 0.5, c), TestFunction::indicator(0.0, 1.0, c)};
    CHECK_THROWS_AS(generating_fn_truncated(req), invalid_parameter);
}

TEST_CASE("product-function distance between configurations") {
    ComplexBox box{-1.0, 1.0, -1.0, 1.0, 5};
    auto z = Configuration::lattice();
    CHECK(phi_moderate_distance(z, z, box) == 0.0);

    double d10 = phi_moderate_distance(z.restricted(-10.0, 10.0), z, box);
    double d20 = phi_moderate_distance(z.restricted(-20.0, 20.0), z, box);
    double d40 = phi_moderate_distance(z.restricted(-40.0, 40.0), z, box);
    CHECK(d10 > d20);
    CHECK(d20 > d40);

    CHECK(phi_moderate_distance(z.shifted(0.5), z, box) > 0.01);
}
