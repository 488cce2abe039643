#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "dyson/configuration.hpp"
#include "dyson/errors.hpp"
#include "dyson/quadrature.hpp"
#include "dyson/special.hpp"

namespace dyson {

struct SpaceTimePoint {
    double t = 0.0;
    double x = 0.0;
};

enum class KernelFamily {
    finite_contour,
    finite_residue,
    infinite_limit,
    lattice_theta,
    sine,
    extended_sine,
    cluster
};

struct KernelTolerances {
    double quad_tol = 1e-10;
    double series_tol = 1e-12;
    double product_tol = 1e-10;
};

struct KernelTruncation {
    double L_window = 600.0;   // half-width of the lattice index window for products
    int q_max = 200;           // hard cap on the cluster q-series
    int ell_max = 64;          // hard cap on lattice sums
    int k_cluster_range = 12;  // cluster indices |k| <= range
};

struct KernelSpec {
    KernelFamily family = KernelFamily::sine;
    Configuration config;
    KernelTolerances tolerances;
    KernelTruncation truncation;
};

struct KernelValue {
    double value = 0.0;
    double imag_residual = 0.0;
    double est_error = 0.0;
};

// ----- sine kernels ---------------------------------------------------------

inline double sine_kernel(double r) { return sinc_pi(r); }

// K_sin(dt, dr): three branches of the extended sine kernel
inline double extended_sine(double dt, double dr, double tol = 1e-12) {
    if (dt == 0.0) return sine_kernel(dr);
    if (dt > 0.0) {
        auto f = [&](double u) { return std::exp(0.5 * PI * PI * u * u * dt) * std::cos(PI * u * dr); };
        return integrate_adaptive(f, 0.0, 1.0, tol, tol).value;
    }
    auto f = [&](double u) { return std::exp(0.5 * PI * PI * u * u * dt) * std::cos(PI * u * dr); };
    double U = std::sqrt(std::max(1.0, 2.0 * std::log(1.0 / tol) / (PI * PI * (-dt)))) + 1.0;
    return -integrate_adaptive(f, 1.0, U, tol, tol).value;
}

// single-integral form over |k| <= pi with the backward-time heat subtraction
inline double extended_sine_integral_form(double dt, double dr, double tol = 1e-12) {
    auto f = [&](double k) { return std::exp(0.5 * k * k * dt) * std::cos(k * dr); };
    double v = integrate_adaptive(f, 0.0, PI, tol, tol).value / PI;
    if (dt < 0.0) v -= heat_kernel(-dt, dr, 0.0);
    return v;
}

// ----- entire function Phi ---------------------------------------------------

namespace detail {

// tail of sum_{l > L} log of +-paired factors for an unsquared lattice rule:
// paired factor = 1 - ctilde/(g^{2}\ - alpha^2) in the reduced variables
// zeta=(z-u)/c, alpha=(a-u)/c, ctilde = zeta^2 - alpha^2.
struct PhiTail {
    Complex log_sum{0.0, 0.0};
    double est = 0.0;
    bool ok = false;
};

inline PhiTail phi_tail_paired(double kappa, Complex alpha, Complex ctilde, double L) {
    PhiTail out;
    double X = L + 0.5;
    double gX2 = std::pow(X, 2.0 * kappa);
    Complex alpha2 = alpha * alpha;
    if (!(std::abs(ctilde) < 0.5 * std::abs(gX2 - alpha2))) return out;

    Complex series(0.0, 0.0);
    Complex cpow(1.0, 0.0);
    double last = 0.0;
    for (int j = 1; j <= 12; ++j) {
        cpow *= ctilde;
        Complex Ij(0.0, 0.0);
        Complex a2pow(1.0, 0.0);
        for (int i = 0; i <= 10; ++i) {
            double e = 2.0 * kappa * (j + i) - 1.0;
            Ij += binomial(j + i - 1, i) * a2pow * std::pow(X, -e) / e;
            a2pow *= alpha2;
        }
        Complex term = -(cpow / double(j)) * Ij;
        series += term;
        last = std::abs(term);
    }
    auto f = [&](double l) {
        double g2 = std::pow(l, 2.0 * kappa);
        return std::log(Complex(1.0, 0.0) - ctilde / (g2 - alpha2));
    };
    double h = 0.25;
    Complex f1 = (f(X + h) - f(X - h)) / (2.0 * h);
    Complex f3 = (f(X + 2 * h) - 2.0 * f(X + h) + 2.0 * f(X - h) - f(X - 2 * h)) / (2.0 * h * h * h);
    out.log_sum = series + f1 / 24.0 - 7.0 * f3 / 5760.0;
    out.est = last + std::abs(7.0 * f3 / 5760.0) * 0.5;
    out.ok = true;
    return out;
}

} // namespace detail

// Phi(xi, a, z) = prod over xi minus all mass at a of (x - z)/(x - a).
// The reference point a may be complex (the moderate-convergence metric uses
// a = i).  Finite: direct product.  Unsquared lattice tails: closed sine form
// when the rule is a pure affine lattice, otherwise symmetric index window
// [-L, L] plus the paired-factor Euler-Maclaurin tail.  Squared tails:
// window only, absolutely convergent, with the leading tail as est.
inline Complex phi_entire(const Configuration& xi, Complex a, Complex z, double tol,
                          double L_window = 600.0) {
    bool real_a = a.imag() == 0.0;
    auto excluded = [&](double x) { return real_a && x == a.real(); };
    if (xi.is_finite()) {
        Complex prod(1.0, 0.0);
        for (const Atom& at : xi.atoms()) {
            if (excluded(at.x)) continue;
            Complex f = (at.x - z) / (at.x - a);
            for (int m = 0; m < at.mult; ++m) prod *= f;
        }
        return prod;
    }
    const TailRule& t = xi.tail();

    if (!t.is_squared && t.kappa == 1.0 && xi.added().empty() && xi.removed().empty()) {
        Complex zeta = (z - t.offset) / t.scale;
        Complex alpha = (a - t.offset) / t.scale;
        if (real_a) {
            long long l0 = std::llround(alpha.real());
            if (t.point_at(l0) == a.real()) return sinc_pi(zeta - double(l0));
        }
        return std::sin(PI * zeta) / std::sin(PI * alpha);
    }

    if (!t.is_squared) {
        Complex alpha = (a - t.offset) / t.scale;
        Complex zeta = (z - t.offset) / t.scale;
        double L = std::max(L_window, std::pow(std::max(std::abs(alpha), std::abs(zeta)), 1.0 / t.kappa) + 50.0);
        double maxL = 4.0 * std::max(L_window, 600.0);
        Complex ctilde = zeta * zeta - alpha * alpha;
        for (;;) {
            detail::PhiTail tail = detail::phi_tail_paired(t.kappa, alpha, ctilde, L);
            if (tail.ok && tail.est <= tol) {
                Complex prod(1.0, 0.0);
                double lo = t.point_at(-(long long)L), hi = t.point_at((long long)L);
                for (const Atom& at : xi.window(lo, hi)) {
                    if (excluded(at.x)) continue;
                    Complex f = (at.x - z) / (at.x - a);
                    for (int m = 0; m < at.mult; ++m) prod *= f;
                }
                return prod * std::exp(tail.log_sum);
            }
            if (L >= maxL)
                throw truncation_failure("phi tail estimate " +
                                         std::to_string(tail.ok ? tail.est : 1.0) +
                                         " above tolerance at maximum window");
            L *= 2.0;
        }
    }

    // squared tail: one-sided positions ~ l^{2 kappa}, absolutely convergent
    double L = L_window;
    double maxL = 4.0 * std::max(L_window, 600.0);
    for (;;) {
        double X = L + 0.5;
        double far = std::abs(t.post_scale) * t.scale * t.scale * std::pow(X, 2.0 * t.kappa);
        double est = 2.0 * std::abs(z - a) * std::pow(X, 1.0 - 2.0 * t.kappa) /
                     ((2.0 * t.kappa - 1.0) * std::abs(t.post_scale) * t.scale * t.scale);
        if (est <= tol && far > 4.0 * (std::abs(a) + std::abs(z))) {
            double lo = std::min(t.point_at(-(long long)L), t.point_at((long long)L));
            double hi = std::max(t.point_at(-(long long)L), t.point_at((long long)L));
            hi = std::max(hi, t.post_offset + far);
            lo = std::min(lo, t.post_offset - far);
            Complex prod(1.0, 0.0);
            for (const Atom& at : xi.window(lo, hi)) {
                if (excluded(at.x)) continue;
                Complex f = (at.x - z) / (at.x - a);
                for (int m = 0; m < at.mult; ++m) prod *= f;
            }
            return prod;
        }
        if (L >= maxL)
            throw truncation_failure("squared-tail phi window exhausted");
        L *= 2.0;
    }
}

// ----- residue-form kernels (Eq. 2.2 / 2.3 shape) ----------------------------

namespace detail {

struct JResult {
    Complex value{0.0, 0.0};
    double est = 0.0;
};

// integral of p(t,-iy|y') Phi(xi, xprime, iy') dy' after the contour shift
// onto z = y + i sqrt(2t) v with Gauss-Hermite weight e^{-v^2}
inline JResult j_integral(const Configuration& xi, double xprime, double t, double y,
                          double quad_tol, double product_tol) {
    double c = std::sqrt(2.0 * t);
    auto eval = [&](int n) {
        const QuadRule& r = hermite_rule(n);
        Complex acc(0.0, 0.0);
        for (int i = 0; i < n; ++i)
            acc += r.w[i] * phi_entire(xi, xprime, Complex(y, c * r.x[i]), product_tol);
        return acc / std::sqrt(PI);
    };
    int n = 48;
    Complex prev = eval(n);
    JResult res;
    while (true) {
        Complex cur = eval(2 * n);
        res.value = cur;
        res.est = std::abs(cur - prev);
        if (res.est <= std::max(0.1 * quad_tol, 1e-15 * std::abs(cur)) || 2 * n >= 384) return res;
        prev = cur;
        n *= 2;
    }
}

inline void require_positive_times(double s, double t) {
    if (!(s > 0.0) || !(t > 0.0))
        throw invalid_parameter("kernel evaluation needs s > 0 and t > 0");
}

} // namespace detail

inline KernelValue kernel_finite_residue(const KernelSpec& spec, SpaceTimePoint p1,
                                         SpaceTimePoint p2) {
    double s = p1.t, x = p1.x, t = p2.t, y = p2.x;
    detail::require_positive_times(s, t);
    if (!spec.config.is_finite())
        throw precondition_violation("residue form needs a finite configuration");
    if (!spec.config.simple())
        throw unsupported("residue form needs a simple configuration; use the contour form");
    Complex K(0.0, 0.0);
    double est = 0.0;
    for (const Atom& at : spec.config.atoms()) {
        detail::JResult J = detail::j_integral(spec.config, at.x, t, y,
                                               spec.tolerances.quad_tol,
                                               spec.tolerances.product_tol);
        double w = heat_kernel(s, x, at.x);
        K += w * J.value;
        est += w * J.est;
    }
    if (s > t) K -= heat_kernel(s - t, x, y);
    return {K.real(), std::abs(K.imag()), est};
}

// Eq. (2.3): same residue sum with the x' window cut by the Gaussian factor
inline KernelValue kernel_infinite(const KernelSpec& spec, SpaceTimePoint p1, SpaceTimePoint p2) {
    double s = p1.t, x = p1.x, t = p2.t, y = p2.x;
    detail::require_positive_times(s, t);
    double stol = spec.tolerances.series_tol;
    double reach = std::sqrt(2.0 * s * std::log(1.0 / std::min(stol, 1e-6))) + 1.0;
    Complex K(0.0, 0.0);
    double est = 0.0;
    for (const Atom& at : spec.config.window(x - reach, x + reach)) {
        if (at.mult != 1)
            throw unsupported("infinite-limit kernel needs a simple configuration");
        detail::JResult J = detail::j_integral(spec.config, at.x, t, y,
                                               spec.tolerances.quad_tol,
                                               spec.tolerances.product_tol);
        double w = heat_kernel(s, x, at.x);
        K += w * J.value;
        est += w * J.est;
    }
    est += 2.0 * heat_kernel(s, x, x + reach);  // skipped-tail scale
    if (s > t) K -= heat_kernel(s - t, x, y);
    return {K.real(), std::abs(K.imag()), est};
}

// ----- contour-form kernel (Eq. 2.1) -----------------------------------------

namespace detail {

// inner z-contour at one outer node y' = yp: midpoint trapezoid of
// f(z)/(w - z) with f(z) = p(s,x|z) prod (u-w)/(u-z) on an ellipse around
// the support, plus the closed-form compensation for the pole at w = i yp.
// With v+/v- the Joukowski preimages of w, the midpoint trapezoid of the
// pole piece sums exactly to fw [1/(1+v+^M) - v-^M/(1+v-^M)]; computing it
// in log space keeps the heat factor at w from overflowing at far-out outer
// nodes.  The ellipse height is capped so the heat factor stays below e^10
// on the contour, where a circle of support radius would carry e^{R^2/2s}.
inline Complex contour_g(double s, double x, double yp, const std::vector<double>& xs,
                         double c0, double A, double B, int M) {
    Complex w(0.0, yp);
    Complex acc(0.0, 0.0);
    for (int m = 0; m < M; ++m) {
        double th = 2.0 * PI * (m + 0.5) / M;
        Complex z(c0 + A * std::cos(th), B * std::sin(th));
        Complex dz(-A * std::sin(th), B * std::cos(th));
        Complex f = heat_kernel(s, Complex(x, 0.0), z);
        for (double u : xs) f *= (u - w) / (u - z);
        acc += f / (w - z) * dz;
    }
    acc /= Complex(0.0, double(M));

    Complex xw = Complex(x, 0.0) - w;
    Complex logfw = -xw * xw / (2.0 * s) - 0.5 * std::log(2.0 * PI * s);
    Complex root = std::sqrt((w - c0) * (w - c0) - (A * A - B * B));
    Complex vp = (w - c0 + root) / (A + B), vm = (w - c0 - root) / (A + B);
    if (std::abs(vp) < std::abs(vm)) std::swap(vp, vm);
    auto pole_term = [&](Complex v, bool inner) -> Complex {
        Complex Lv = double(M) * std::log(v);
        Complex lg = logfw;
        if (inner) lg += Lv;
        if (Lv.real() > 40.0) {
            lg -= Lv;
        } else if (Lv.real() > -40.0) {
            Complex den = 1.0 + std::exp(Lv);
            if (std::abs(den) < 1e-12)
                throw contour_placement_failure("outer node pinned to the contour");
            lg -= std::log(den);
        }
        // underflow to zero is fine; a huge term means M is too small for this
        // node and must stay finite so the doubling estimate can catch it
        if (lg.real() > 700.0) lg = Complex(700.0, lg.imag());
        return std::exp(lg);
    };
    acc += pole_term(vp, false);
    acc -= pole_term(vm, true);
    return acc;
}

} // namespace detail

inline KernelValue kernel_finite_contour(const KernelSpec& spec, SpaceTimePoint p1,
                                         SpaceTimePoint p2) {
    double s = p1.t, x = p1.x, t = p2.t, y = p2.x;
    detail::require_positive_times(s, t);
    if (!spec.config.is_finite())
        throw precondition_violation("contour form needs a finite configuration");
    std::vector<double> xs = spec.config.expanded();
    if (xs.empty()) throw precondition_violation("contour form needs at least one point");
    if (y * y / (2.0 * t) > 600.0)
        throw numeric_failure("contour form prefactor overflows at this (t, y)");
    double c0 = (xs.front() + xs.back()) / 2.0;
    double A = (xs.back() - xs.front()) / 2.0 + 1.0;
    double B = std::min(1.0, std::sqrt(20.0 * s));

    auto eval = [&](int ngh, int M) {
        const QuadRule& r = hermite_rule(ngh);
        double c = std::sqrt(2.0 * t);
        Complex acc(0.0, 0.0);
        for (int i = 0; i < ngh; ++i) {
            double yp = c * r.x[i];
            Complex osc = std::exp(Complex(0.0, -y * yp / t));
            acc += r.w[i] * osc * detail::contour_g(s, x, yp, xs, c0, A, B, M);
        }
        return acc * std::exp(y * y / (2.0 * t)) / std::sqrt(PI);
    };

    int ngh = 64, M = 256;
    Complex prev = eval(ngh, M);
    Complex cur = prev;
    double est = 0.0;
    while (true) {
        cur = eval(2 * ngh, 2 * M);
        est = std::abs(cur - prev);
        if (est <= spec.tolerances.quad_tol || ngh >= 512) break;
        prev = cur;
        ngh *= 2;
        M *= 2;
    }
    if (s > t) cur -= heat_kernel(s - t, x, y);
    return {cur.real(), std::abs(cur.imag()), est};
}

// ----- lattice kernel: theta closed form and cross-check sums ----------------

// I(t,y,l) = (1/2pi) int_{|k|<=pi} e^{k^2 t/2 + ik(y-l)} dk
inline double lattice_i_integral(double t, double y, double l, double tol = 1e-12) {
    auto f = [&](double k) { return std::exp(0.5 * k * k * t) * std::cos(k * (y - l)); };
    return integrate_adaptive(f, 0.0, PI, tol, tol).value / PI;
}

inline KernelValue kernel_lattice_theta(SpaceTimePoint p1, SpaceTimePoint p2,
                                        double tol = 1e-10) {
    double s = p1.t, x = p1.x, t = p2.t, y = p2.x;
    if (s < 0.0 || t < 0.0) throw invalid_parameter("lattice kernel needs s, t >= 0");
    if (s == 0.0) {
        if (x != std::round(x))
            throw invalid_parameter("s = 0 lattice kernel is defined only at integer x");
        return {lattice_i_integral(t, y, x, tol), 0.0, tol};
    }
    Complex tau(0.0, 2.0 * PI * s);
    auto f = [&](double k) {
        Complex th = theta3({Complex(x, -k * s), tau}, tol) - 1.0;
        return std::exp(Complex(0.5 * k * k * (t - s), k * (y - x))) * th;
    };
    Integral<Complex> I = integrate_adaptive(f, -PI, PI, tol, tol);
    Complex K = extended_sine(t - s, y - x, tol) + I.value / (2.0 * PI);
    return {K.real(), std::abs(K.imag()), I.est_error / (2.0 * PI) + tol};
}

// direct sum of Eq. (4.6) shape: sum_l p(s,x|l) I(t,y,l) - 1(s>t) p(s-t,x|y)
inline KernelValue kernel_lattice_direct(SpaceTimePoint p1, SpaceTimePoint p2,
                                         double tol = 1e-10, int ell_max = 64) {
    double s = p1.t, x = p1.x, t = p2.t, y = p2.x;
    if (!(s > 0.0)) throw invalid_parameter("direct lattice sum needs s > 0");
    double reach = std::sqrt(2.0 * s * std::log(1.0 / std::min(tol, 1e-6))) + 2.0;
    long long lo = llround(std::floor(x - reach)), hi = llround(std::ceil(x + reach));
    if (hi - lo > 2 * ell_max) throw truncation_failure("lattice sum window exceeds ell_max");
    double K = 0.0;
    for (long long l = lo; l <= hi; ++l)
        K += heat_kernel(s, x, double(l)) * lattice_i_integral(t, y, double(l), tol);
    if (s > t) K -= heat_kernel(s - t, x, y);
    return {K, 0.0, tol};
}

// equal-time closed sum: sum_l e^{2 pi i x l - 2 pi^2 t l^2} sinc(pi((y-x) - 2 pi i t l))
inline KernelValue kernel_lattice_remark(double t, double x, double y, double tol = 1e-12) {
    if (!(t > 0.0)) throw invalid_parameter("remark formula needs t > 0");
    long long lmax = llround(std::ceil(std::sqrt(std::log(1.0 / tol) / (2.0 * PI * PI * t)))) + 2;
    Complex K(0.0, 0.0);
    for (long long l = -lmax; l <= lmax; ++l) {
        Complex expo = std::exp(Complex(-2.0 * PI * PI * t * l * l, 2.0 * PI * x * l));
        K += expo * sinc_pi(Complex(y - x, -2.0 * PI * t * l));
    }
    return {K.real(), std::abs(K.imag()), tol};
}

// sup over the grid of |K^{xi_Z}(u+s, x; u+t, y) - K_sin(t-s, y-x)|
inline double relaxation_gap(double u, double s, double t, const std::vector<double>& xs,
                             const std::vector<double>& ys, double tol = 1e-10) {
    if (!(u > 0.0)) throw invalid_parameter("relaxation gap needs u > 0");
    double sup = 0.0;
    for (double x : xs)
        for (double y : ys) {
            KernelValue K = kernel_lattice_theta({u + s, x}, {u + t, y}, tol);
            sup = std::max(sup, std::abs(K.value - extended_sine(t - s, y - x, tol)));
        }
    return sup;
}

// explicit bound expression from the relaxation proof display
inline double relaxation_bound(double u, double s, double t) {
    double pref = std::max(std::exp(0.5 * PI * PI * (t - s)), 1.0);
    double us = u + s;
    double e4 = std::exp(-4.0 * PI * PI * us);
    double e2 = std::exp(-2.0 * PI * PI * us);
    return pref * ((1.0 - e4) / (2.0 * PI * PI * us) + 2.0 * e4 / (1.0 - e2));
}

// ----- cluster expansion ------------------------------------------------------

namespace detail {

// power sums sum (u - c)^{-i} over xi minus the cluster, symmetric index
// window with an integral-plus-midpoint tail for lattice rules
inline std::vector<double> cluster_power_sums(const Configuration& rest, double c, int imax) {
    std::vector<double> p(size_t(imax) + 1, 0.0);
    double lo, hi;
    bool tail = rest.has_tail();
    long long Lw = 2000;
    if (tail) {
        lo = std::min(rest.tail().point_at(-Lw), rest.tail().point_at(Lw));
        hi = std::max(rest.tail().point_at(-Lw), rest.tail().point_at(Lw));
    } else {
        lo = rest.support_min();
        hi = rest.support_max();
    }
    for (const Atom& at : rest.window(lo, hi)) {
        double r = 1.0 / (at.x - c);
        double rp = 1.0;
        for (int i = 1; i <= imax; ++i) {
            rp *= r;
            p[i] += at.mult * rp;
        }
    }
    if (tail) {
        const TailRule& tr = rest.tail();
        double X = double(Lw) + 0.5;
        for (int i = 1; i <= std::min(imax, 8); ++i) {
            auto f = [&](double l) {
                double a = tr.scale * g_kappa(tr.kappa, l) + tr.offset;
                double b = tr.scale * g_kappa(tr.kappa, -l) + tr.offset;
                return std::pow(a - c, -double(i)) + std::pow(b - c, -double(i));
            };
            auto sub = [&](double tau) { return f(X / tau) * X / (tau * tau); };
            double integral = integrate_adaptive(sub, 0.0, 1.0, 1e-14, 1e-12).value;
            double h = 0.25;
            double f1 = (f(X + h) - f(X - h)) / (2.0 * h);
            p[i] += integral + f1 / 24.0;
        }
    }
    return p;
}

// per-cluster series data independent of the spectral variable z
struct ClusterSeries {
    int n = 0;                    // |cluster|
    double center = 0.0;
    std::vector<double> theta;    // Theta_{k,q} for q = 0..built
    std::vector<double> S;        // bracket tails per p = 0..n-1
    std::vector<Atom> members;
};

inline double theta_from_tables(int q, const std::vector<double>& U, const std::vector<double>& h) {
    double acc = 0.0;
    for (int r = 0; r <= q; ++r) acc += U[size_t(q - r)] * h[size_t(r)];
    return acc;
}

inline ClusterSeries build_cluster_series(double t, const Configuration& xi, double x,
                                          const Cluster& cl, double series_tol, int q_max) {
    ClusterSeries cs;
    cs.n = cl.size;
    cs.center = cl.center;
    cs.members = cl.members;
    if (cs.n == 0) return cs;

    Configuration rest = xi.without(cl.members);
    std::vector<double> p = cluster_power_sums(rest, cl.center, q_max);
    std::vector<double> h = h_from_power_sums(q_max, p);

    // U_m = (-1/sqrt(2t))^m H_m((c-x)/sqrt(2t)) / m!
    double beta = 1.0 / std::sqrt(2.0 * t);
    double arg = (cl.center - x) * beta;
    std::vector<double> U(size_t(q_max) + 1);
    U[0] = 1.0;
    if (q_max >= 1) U[1] = -beta * 2.0 * arg;
    for (int m = 1; m < q_max; ++m)
        U[size_t(m) + 1] = (-beta * 2.0 * arg * U[size_t(m)] - 2.0 * beta * beta * U[size_t(m) - 1]) / (m + 1);

    std::vector<double> w;
    for (const Atom& at : cl.members)
        for (int m = 0; m < at.mult; ++m) w.push_back(at.x - cl.center);

    int n = cs.n;
    cs.S.assign(size_t(n), 0.0);
    std::vector<double> peak(size_t(n), 0.0);
    cs.theta.resize(size_t(n));
    for (int q = 0; q < n; ++q) cs.theta[size_t(q)] = theta_from_tables(q, U, h);

    int quiet = 0;
    for (int q = n; q <= q_max; ++q) {
        double Th = theta_from_tables(q, U, h);
        if (!std::isfinite(Th)) throw truncation_failure("cluster theta series overflowed");
        double worst = 0.0;
        for (int pp = 0; pp < n; ++pp) {
            double term = Th * schur_frobenius(q - n, n - 1 - pp, w);
            cs.S[size_t(pp)] += term;
            peak[size_t(pp)] = std::max(peak[size_t(pp)], std::abs(term));
            double scale = std::max(peak[size_t(pp)], std::abs(cs.S[size_t(pp)]));
            if (scale > 0.0) worst = std::max(worst, std::abs(term) / scale);
        }
        quiet = worst < series_tol ? quiet + 1 : 0;
        if (quiet >= 3) return cs;
        if (q == q_max)
            throw truncation_failure("cluster q-series not converged by q_max");
    }
    return cs;
}

inline Complex psi_from_series(const ClusterSeries& cs, Complex z) {
    if (cs.n == 0) return Complex(0.0, 0.0);
    Complex y = z - cs.center;
    Complex tot(0.0, 0.0);
    Complex yp(1.0, 0.0);
    for (int p = 0; p < cs.n; ++p) {
        double sgn = ((cs.n - 1 - p) % 2 == 0) ? 1.0 : -1.0;
        tot += yp * (cs.theta[size_t(p)] + sgn * cs.S[size_t(p)]);
        yp *= y;
    }
    return tot;
}

inline double cluster_kappa(const Configuration& xi) {
    if (xi.has_tail() && xi.tail().kappa < 0.9) return std::max(0.55, xi.tail().kappa);
    return 0.9;
}

} // namespace detail

// Theta_{k,q}(t, xi, x) for the decomposition dec
inline double theta_coeff(double t, const Configuration& xi, double x, long long k, int q,
                          const ClusterDecomposition& dec) {
    if (!(t > 0.0)) throw invalid_parameter("theta_coeff needs t > 0");
    const Cluster& cl = dec.at(k);
    Configuration rest = xi.without(cl.members);
    std::vector<double> p = detail::cluster_power_sums(rest, cl.center, q);
    std::vector<double> h = h_from_power_sums(q, p);
    double beta = 1.0 / std::sqrt(2.0 * t);
    double arg = (cl.center - x) * beta;
    std::vector<double> U(size_t(q) + 1);
    U[0] = 1.0;
    if (q >= 1) U[1] = -beta * 2.0 * arg;
    for (int m = 1; m < q; ++m)
        U[size_t(m) + 1] = (-beta * 2.0 * arg * U[size_t(m)] - 2.0 * beta * beta * U[size_t(m) - 1]) / (m + 1);
    return detail::theta_from_tables(q, U, h);
}

// Psi_k(t, xi, z, x): bracket series times the cluster-free entire function
inline Complex psi_cluster(double t, const Configuration& xi, Complex z, double x, long long k,
                           const ClusterDecomposition& dec, double series_tol = 1e-12,
                           double product_tol = 1e-10, int q_max = 200) {
    if (!(t > 0.0)) throw invalid_parameter("psi_cluster needs t > 0");
    const Cluster& cl = dec.at(k);
    if (cl.size == 0) return Complex(0.0, 0.0);
    detail::ClusterSeries cs = detail::build_cluster_series(t, xi, x, cl, series_tol, q_max);
    Configuration rest = xi.without(cl.members);
    return phi_entire(rest, cl.center, z, product_tol) * detail::psi_from_series(cs, z);
}

// Eq. (4.4): K = sum_k p(s,x|c_k) int dy' p(t,-iy|y') Psi_k(s,xi,iy',x) - 1(s>t) p
inline KernelValue kernel_cluster(const KernelSpec& spec, SpaceTimePoint p1, SpaceTimePoint p2) {
    double s = p1.t, x = p1.x, t = p2.t, y = p2.x;
    detail::require_positive_times(s, t);
    const Configuration& xi = spec.config;
    double kappa = detail::cluster_kappa(xi);

    double stol = spec.tolerances.series_tol;
    double reach = std::sqrt(2.0 * s * std::log(1.0 / std::min(stol, 1e-6))) + 1.0;
    long long k_need = llround(std::ceil(
        std::pow(std::abs(x) + reach + 1.0, 1.0 / kappa)));
    long long K_range = std::min<long long>(k_need + 1, spec.truncation.k_cluster_range);
    double est_tail = k_need + 1 > K_range ? 2.0 * heat_kernel(s, x, g_kappa(kappa, double(K_range))) : 0.0;

    ClusterDecomposition dec = decompose_clusters(xi, kappa, -K_range, K_range);

    std::vector<detail::ClusterSeries> series;
    std::vector<double> weights;
    for (const Cluster& cl : dec.clusters) {
        if (cl.size == 0) continue;
        double wgt = heat_kernel(s, x, cl.center);
        if (wgt < stol * 1e-3) continue;
        series.push_back(detail::build_cluster_series(s, xi, x, cl, stol, spec.truncation.q_max));
        weights.push_back(wgt);
    }
    std::vector<Configuration> rests;
    for (const detail::ClusterSeries& cs : series) rests.push_back(xi.without(cs.members));

    auto eval = [&](int ngh) {
        const QuadRule& r = hermite_rule(ngh);
        double c = std::sqrt(2.0 * t);
        Complex acc(0.0, 0.0);
        for (int i = 0; i < ngh; ++i) {
            Complex z(y, c * r.x[i]);
            Complex inner(0.0, 0.0);
            for (size_t q = 0; q < series.size(); ++q)
                inner += weights[q] * phi_entire(rests[q], series[q].center, z,
                                                 spec.tolerances.product_tol) *
                         detail::psi_from_series(series[q], z);
            acc += r.w[i] * inner;
        }
        return acc / std::sqrt(PI);
    };
    Complex a = eval(48), b = eval(96);
    double est = std::abs(a - b) + est_tail;
    if (s > t) b -= heat_kernel(s - t, x, y);
    return {b.real(), std::abs(b.imag()), est};
}

// ----- dispatch ---------------------------------------------------------------

inline KernelValue eval_kernel(const KernelSpec& spec, SpaceTimePoint p1, SpaceTimePoint p2) {
    switch (spec.family) {
        case KernelFamily::sine:
            return {sine_kernel(p2.x - p1.x), 0.0, 0.0};
        case KernelFamily::extended_sine:
            return {extended_sine(p2.t - p1.t, p2.x - p1.x, spec.tolerances.quad_tol), 0.0,
                    spec.tolerances.quad_tol};
        case KernelFamily::finite_residue:
            return kernel_finite_residue(spec, p1, p2);
        case KernelFamily::finite_contour:
            return kernel_finite_contour(spec, p1, p2);
        case KernelFamily::infinite_limit:
            return kernel_infinite(spec, p1, p2);
        case KernelFamily::lattice_theta:
            return kernel_lattice_theta(p1, p2, spec.tolerances.quad_tol);
        case KernelFamily::cluster:
            return kernel_cluster(spec, p1, p2);
    }
    throw invalid_parameter("unknown kernel family");
}

inline KernelFamily parse_family(const std::string& s) {
    if (s == "finite_contour") return KernelFamily::finite_contour;
    if (s == "finite_residue") return KernelFamily::finite_residue;
    if (s == "infinite_limit") return KernelFamily::infinite_limit;
    if (s == "lattice_theta") return KernelFamily::lattice_theta;
    if (s == "sine") return KernelFamily::sine;
    if (s == "extended_sine") return KernelFamily::extended_sine;
    if (s == "cluster") return KernelFamily::cluster;
    throw invalid_parameter("unknown kernel family: " + s);
}

inline std::string family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::finite_contour: return "finite_contour";
        case KernelFamily::finite_residue: return "finite_residue";
        case KernelFamily::infinite_limit: return "infinite_limit";
        case KernelFamily::lattice_theta: return "lattice_theta";
        case KernelFamily::sine: return "sine";
        case KernelFamily::extended_sine: return "extended_sine";
        case KernelFamily::cluster: return "cluster";
    }
    return "unknown";
}

} // namespace dyson
