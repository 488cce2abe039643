#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dyson/kernels.hpp"
#include "dyson/quadrature.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace dyson;
using Complex = std::complex<double>;

namespace {
KernelSpec spec_for(KernelFamily f, Configuration c) {
    KernelSpec s;
    s.family = f;
    s.config = std::move(c);
    return s;
}
Configuration pair_config() { return Configuration::finite({{-0.5, 1}, {0.5, 1}}); }
}  // namespace

TEST_CASE("sine kernel point values") {
    CHECK(sine_kernel(0.0) == 1.0);
    CHECK(std::abs(sine_kernel(1.0)) < 1e-15);
    CHECK(sine_kernel(0.5) == doctest::Approx(2.0 / M_PI).epsilon(1e-14));
}

TEST_CASE("extended sine kernel branches") {
    for (double r : {-1.1, 0.0, 0.4, 2.3}) CHECK(extended_sine(0.0, r) == doctest::Approx(sine_kernel(r)));
    CHECK(extended_sine(0.3, 0.0) > 1.0);

    // all three branches against the Fourier-side form
    for (auto [dt, dr] : std::vector<std::pair<double, double>>{
             {0.3, 0.4}, {0.5, 0.0}, {-0.3, 0.4}, {-0.2, -1.1}, {0.0, 0.7}}) {
        double a = extended_sine(dt, dr);
        double b = extended_sine_integral_form(dt, dr);
        CHECK(std::abs(a - b) < 1e-9);
    }
}

TEST_CASE("entire product function on the lattice") {
    auto z = Configuration::lattice();
    for (double l : {0.0, 2.0, -1.0})
        for (Complex zz : {Complex(0.4, 0.0), Complex(-1.7, 0.6), Complex(2.9, -0.4)}) {
            Complex got = phi_entire(z, Complex(l, 0), zz + l, 1e-10);
            Complex expect = sinc_pi<Complex>(zz);
            CHECK(std::abs(got - expect) < 1e-8);
        }

    // empty product at the anchor, zero on the remaining support
    CHECK(std::abs(phi_entire(z, Complex(1, 0), Complex(1, 0), 1e-10) - 1.0) < 1e-14);
    CHECK(std::abs(phi_entire(z, Complex(0, 0), Complex(3, 0), 1e-10)) < 1e-10);
}

TEST_CASE("entire product tracks point edits") {
    auto z = Configuration::lattice();
    auto z5 = z.without({{5.0, 1}});
    for (Complex zz : {Complex(0.4, 0.0), Complex(-0.9, 0.3)}) {
        Complex base = sinc_pi<Complex>(zz);
        Complex expect = base * 5.0 / (5.0 - zz);
        Complex got = phi_entire(z5, Complex(0, 0), zz, 1e-10);
        CHECK(std::abs(got - expect) < 1e-9);
    }
}

TEST_CASE("entire product window convergence on the stretched lattice") {
    auto eta = Configuration::stretched_lattice(0.8);
    Complex zz(0.4, 0.2);
    Complex a = phi_entire(eta, Complex(0, 0), zz, 1e-10, 600.0);
    Complex b = phi_entire(eta, Complex(0, 0), zz, 1e-10, 1200.0);
    CHECK(std::abs(a - b) < 1e-9);
}

TEST_CASE("single particle kernel is the heat kernel") {
    auto sp = spec_for(KernelFamily::finite_residue, Configuration::finite({{0.0, 1}}));
    double s = 0.5, t = 0.5;
    for (double x : {-0.7, 0.3})
        for (double y : {-0.2, 0.9}) {
            auto kv = kernel_finite_residue(sp, {s, x}, {t, y});
            CHECK(kv.value == doctest::Approx(heat_kernel(s, x, 0.0)).epsilon(1e-9));
        }
    // ordered times subtract the transition term
    auto kv = kernel_finite_residue(sp, {1.0, 0.3}, {0.5, 0.9});
    CHECK(kv.value ==
          doctest::Approx(heat_kernel(1.0, 0.3, 0.0) - heat_kernel(0.5, 0.3, 0.9)).epsilon(1e-9));
}

TEST_CASE("contour and residue forms agree") {
    for (auto cfg : {pair_config(), Configuration::finite({{-1.0, 1}, {0.2, 1}, {0.9, 1}})}) {
        auto sr = spec_for(KernelFamily::finite_residue, cfg);
        auto sc = spec_for(KernelFamily::finite_contour, cfg);
        for (auto [s, x, t, y] : std::vector<std::array<double, 4>>{
                 {0.5, 0.3, 0.5, -0.4}, {0.25, 0.8, 0.75, 0.1}}) {
            auto a = kernel_finite_residue(sr, {s, x}, {t, y});
            auto b = kernel_finite_contour(sc, {s, x}, {t, y});
            CHECK(std::abs(a.value - b.value) < 1e-8);
            CHECK(a.imag_residual < 100 * sr.tolerances.quad_tol);
            CHECK(b.imag_residual < 100 * sc.tolerances.quad_tol);
        }
    }
}

TEST_CASE("residue form rejects what it cannot represent") {
    auto dbl = spec_for(KernelFamily::finite_residue, Configuration::finite({{0.0, 2}}));
    CHECK_THROWS_AS(kernel_finite_residue(dbl, {0.5, 0.1}, {0.5, 0.2}), unsupported);
    auto inf = spec_for(KernelFamily::finite_residue, Configuration::lattice());
    CHECK_THROWS_AS(kernel_finite_residue(inf, {0.5, 0.1}, {0.5, 0.2}), precondition_violation);
    CHECK_THROWS_AS(kernel_finite_residue(spec_for(KernelFamily::finite_residue, pair_config()),
                                          {0.0, 0.1}, {0.5, 0.2}),
                    invalid_parameter);
}

TEST_CASE("equal-time density trace for two particles") {
    auto sp = spec_for(KernelFamily::finite_residue, pair_config());
    double t = 0.5;
    auto rho = [&](double x) { return kernel_finite_residue(sp, {t, x}, {t, x}).value; };
    for (double x = -2.0; x <= 2.0; x += 0.25) CHECK(rho(x) >= -1e-10);
    auto tr = integrate_adaptive(rho, -10.0, 10.0, 1e-9, 1e-9);
    CHECK(std::abs(tr.value - 2.0) < 1e-6);
}

TEST_CASE("contour form covers multiple points") {
    // double point at the origin: trace still counts the particles
    auto sp = spec_for(KernelFamily::finite_contour, Configuration::finite({{0.0, 2}}));
    double t = 0.5;
    auto tr = integrate_adaptive(
        [&](double x) { return kernel_finite_contour(sp, {t, x}, {t, x}).value; }, -9.0, 9.0, 1e-9,
        1e-9);
    CHECK(std::abs(tr.value - 2.0) < 1e-6);
}

TEST_CASE("short-time density concentrates on the initial points") {
    auto sp = spec_for(KernelFamily::finite_residue, pair_config());
    auto f = [](double x) { return std::exp(-x * x); };
    double target = f(-0.5) + f(0.5);
    std::vector<double> errs;
    for (double t : {0.1, 0.01, 0.001}) {
        double pad = 8.0 * std::sqrt(t) + 1.0;
        auto m = integrate_adaptive(
            [&](double x) { return f(x) * kernel_finite_residue(sp, {t, x}, {t, x}).value; },
            -0.5 - pad, 0.5 + pad, 1e-10, 1e-10);
        errs.push_back(std::abs(m.value - target));
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    // the moment error is first order in t, so each decade shrinks it tenfold
    CHECK(errs[2] < 0.2 * errs[1]);
    CHECK(errs[2] < 5e-3);
}

TEST_CASE("lattice kernel forms agree at a sample point") {
    SpaceTimePoint p1{0.4, 0.3}, p2{0.6, -0.7};
    auto a = kernel_lattice_theta(p1, p2, 1e-12);
    auto b = kernel_lattice_direct(p1, p2, 1e-12, 64);
    CHECK(std::abs(a.value - b.value) < 1e-8);

    // simultaneous integer shift leaves the kernel unchanged
    auto c = kernel_lattice_theta({0.4, 0.3 + 3.0}, {0.6, -0.7 + 3.0}, 1e-12);
    CHECK(std::abs(a.value - c.value) < 1e-10);

    // equal-time closed form from the reflection sum
    auto d = kernel_lattice_theta({0.3, 0.2}, {0.3, 0.7}, 1e-12);
    auto e = kernel_lattice_remark(0.3, 0.2, 0.7, 1e-12);
    CHECK(std::abs(d.value - e.value) < 1e-9);
}

TEST_CASE("lattice kernel at s = 0") {
    // s = 0 collapses the x-average onto a lattice site
    double t = 0.5, y = 0.4;
    auto kv = kernel_lattice_theta({0.0, 2.0}, {t, y}, 1e-12);
    CHECK(kv.value == doctest::Approx(lattice_i_integral(t, y, 2.0, 1e-12)).epsilon(1e-10));
    CHECK_THROWS_AS(kernel_lattice_theta({0.0, 0.5}, {t, y}, 1e-12), invalid_parameter);
}

TEST_CASE("infinite-limit kernel matches the lattice closed form") {
    auto sp = spec_for(KernelFamily::infinite_limit, Configuration::lattice());
    for (auto [s, x, t, y] : std::vector<std::array<double, 4>>{
             {0.5, 0.3, 0.5, -0.4}, {0.25, -1.2, 0.75, 0.6}}) {
        auto a = kernel_infinite(sp, {s, x}, {t, y});
        auto b = kernel_lattice_theta({s, x}, {t, y}, 1e-12);
        CHECK(std::abs(a.value - b.value) < 1e-7);
    }
}

TEST_CASE("stretched-lattice diagonal is real") {
    auto sp = spec_for(KernelFamily::infinite_limit, Configuration::stretched_lattice(0.8));
    auto kv = kernel_infinite(sp, {0.5, 0.3}, {0.5, 0.3});
    CHECK(kv.imag_residual < 1e-8);
    CHECK(kv.value > 0.0);
}

TEST_CASE("relaxation gap decays") {
    std::vector<double> grid{-1.0, 0.0, 1.0};
    double g1 = relaxation_gap(1.0, 0.5, 0.5, grid, grid);
    double g2 = relaxation_gap(2.0, 0.5, 0.5, grid, grid);
    double g4 = relaxation_gap(4.0, 0.5, 0.5, grid, grid);
    CHECK(g1 > g2);
    CHECK(g2 > g4);
    CHECK(g2 / g1 <= 0.7);
    CHECK(g4 / g2 <= 0.7);

    CHECK(relaxation_bound(1.0, 0.5, 0.5) > relaxation_bound(2.0, 0.5, 0.5));
    CHECK_THROWS_AS(relaxation_gap(0.0, 0.5, 0.5, grid, grid), invalid_parameter);
}

TEST_CASE("cluster series building blocks") {
    auto z = Configuration::lattice();
    auto dec = decompose_clusters(z, 0.9, -8, 8);

    // q = 0 coefficient collapses to one
    CHECK(theta_coeff(0.5, z, 0.3, 1, 0, dec) == doctest::Approx(1.0).epsilon(1e-12));

    // empty cluster contributes nothing
    auto fin = Configuration::finite({{0.0, 1}, {1.0, 1}});
    auto dfin = decompose_clusters(fin, 0.9, -4, 4);
    bool saw_empty = false;
    for (int k = -4; k <= 4; ++k) {
        if (dfin.at(k).size != 0) continue;
        saw_empty = true;
        Complex v = psi_cluster(0.5, fin, Complex(0.3, 0.2), 0.1, k, dfin);
        CHECK(std::abs(v) == 0.0);
    }
    CHECK(saw_empty);
}

TEST_CASE("cluster identity on a windowed lattice") {
    // single-member cluster: the weighted product collapses to one heat factor
    auto w = Configuration::lattice().restricted(-20.0, 20.0);
    auto dec = decompose_clusters(w, 0.9, -6, 6);
    double t = 0.5, x = 0.3;
    int nonempty = 0;
    for (long long k : {1LL, 4LL, -3LL, 2LL, -2LL}) {
        const auto& cl = dec.at(k);
        if (cl.size > 0) ++nonempty;
        for (Complex zz : {Complex(0.4, 0.3), Complex(-1.0, 0.2)}) {
            Complex lhs = 0.0;
            for (const auto& at : cl.members)
                lhs += double(at.mult) * heat_kernel(t, Complex(x, 0), Complex(at.x, 0)) *
                       phi_entire(w, Complex(at.x, 0), zz, 1e-12);
            Complex rhs = heat_kernel(t, Complex(x, 0), Complex(cl.center, 0)) *
                          psi_cluster(t, w, zz, x, k, dec);
            // empty clusters contribute zero on both sides
            CHECK(std::abs(lhs - rhs) < 1e-8);
        }
    }
    CHECK(nonempty >= 3);
}

TEST_CASE("cluster kernel agrees with the infinite-limit form") {
    auto sc = spec_for(KernelFamily::cluster, Configuration::lattice());
    auto si = spec_for(KernelFamily::infinite_limit, Configuration::lattice());
    auto a = kernel_cluster(sc, {0.5, 0.3}, {0.5, -0.4});
    auto b = kernel_infinite(si, {0.5, 0.3}, {0.5, -0.4});
    CHECK(std::abs(a.value - b.value) < 1e-7);
}

TEST_CASE("cluster kernel covers a double point window") {
    std::vector<Atom> atoms{{0.0, 2}};
    for (int l = 1; l <= 6; ++l) {
        atoms.push_back({double(l), 1});
        atoms.push_back({double(-l), 1});
    }
    auto cfg = Configuration::finite(atoms);
    auto sc = spec_for(KernelFamily::cluster, cfg);
    auto sk = spec_for(KernelFamily::finite_contour, cfg);
    auto a = kernel_cluster(sc, {0.5, 0.3}, {0.5, -0.4});
    auto b = kernel_finite_contour(sk, {0.5, 0.3}, {0.5, -0.4});
    CHECK(std::abs(a.value - b.value) < 1e-7);
}

TEST_CASE("family dispatch and naming") {
    for (auto name : {"finite_contour", "finite_residue", "infinite_limit", "lattice_theta",
                      "sine", "extended_sine", "cluster"})
        CHECK(family_name(parse_family(name)) == name);
    CHECK_THROWS_AS(parse_family("fourier"), invalid_parameter);

    KernelSpec s;
    s.family = KernelFamily::sine;
    CHECK(eval_kernel(s, {0.5, 0.1}, {0.5, 0.6}).value == doctest::Approx(sine_kernel(0.5)));
    s.family = KernelFamily::extended_sine;
    CHECK(eval_kernel(s, {0.2, 0.1}, {0.5, 0.6}).value ==
          doctest::Approx(extended_sine(0.3, 0.5)).epsilon(1e-10));
    s.family = KernelFamily::lattice_theta;
    CHECK(eval_kernel(s, {0.4, 0.3}, {0.6, -0.7}).value ==
          doctest::Approx(kernel_lattice_theta({0.4, 0.3}, {0.6, -0.7}, s.tolerances.quad_tol).value));
}
