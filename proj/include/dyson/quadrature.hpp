#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <mutex>
#include <type_traits>
#include <vector>

#include "dyson/errors.hpp"

namespace dyson {

using Complex = std::complex<double>;

inline constexpr double PI = 3.14159265358979323846;

struct QuadRule {
    std::vector<double> x;
    std::vector<double> w;
};

namespace detail {

// Gauss-Hermite, weight e^{-x^2}, nodes ascending.  Nodes come from the
// eigenvalues of the Jacobi matrix (implicit-shift QL, tracking only the first
// eigenvector component for the weights), then two fixed Newton steps on the
// orthonormal recurrence polish nodes and weights to machine precision.
// Newton from extrapolated guesses loses roots past n ~ 200; this does not.
inline QuadRule make_hermite_rule(int n) {
    if (n < 1) throw invalid_parameter("hermite rule needs n >= 1");
    std::vector<double> d(n, 0.0), e(n, 0.0), z(n, 0.0);
    for (int i = 1; i < n; ++i) e[i - 1] = std::sqrt(i / 2.0);
    z[0] = 1.0;
    const double eps = 2.3e-16;
    for (int l = 0; l < n; ++l) {
        int iter = 0, m = l;
        do {
            for (m = l; m < n - 1; ++m) {
                double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == 60) throw numeric_failure("jacobi ql did not converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i = m - 1;
                for (; i >= l; --i) {
                    double f = s * e[i], b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    f = z[i + 1];
                    z[i + 1] = s * z[i] + c * f;
                    z[i] = c * z[i] - s * f;
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });

    const double PIM4 = 0.7511255444649425;
    QuadRule r;
    r.x.assign(n, 0.0);
    r.w.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double zz = d[order[j]];
        double pp = 0.0;
        int scale = 0;
        for (int step = 0; step < 2; ++step) {
            double p1 = PIM4, p2 = 0.0;
            scale = 0;
            for (int k = 1; k <= n; ++k) {
                double p3 = p2;
                p2 = p1;
                p1 = zz * std::sqrt(2.0 / k) * p2 - std::sqrt((k - 1.0) / k) * p3;
                // rescale to dodge overflow at far-out nodes; the Newton step
                // p1/pp is scale-free and the weight unwinds the factor below
                if (std::abs(p1) > 1e100) {
                    p1 *= 1e-100;
                    p2 *= 1e-100;
                    ++scale;
                }
            }
            pp = std::sqrt(2.0 * n) * p2;
            zz -= p1 / pp;
        }
        r.x[j] = zz;
        double w = 2.0 / (pp * pp);
        while (scale-- > 0) w *= 1e-200;
        r.w[j] = w;
    }
    for (int i = 0; i < n / 2; ++i) {
        double a = 0.5 * (r.x[n - 1 - i] - r.x[i]);
        r.x[i] = -a;
        r.x[n - 1 - i] = a;
        double w = 0.5 * (r.w[i] + r.w[n - 1 - i]);
        r.w[i] = r.w[n - 1 - i] = w;
    }
    if (n % 2) r.x[n / 2] = 0.0;
    return r;
}

// Gauss-Legendre on [-1,1], nodes ascending.
inline QuadRule make_legendre_rule(int n) {
    if (n < 1) throw invalid_parameter("legendre rule needs n >= 1");
    QuadRule r;
    r.x.assign(n, 0.0);
    r.w.assign(n, 0.0);
    int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(PI * (i + 0.75) / (n + 0.5));
        double z1, pp;
        do {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            z1 = z;
            z = z1 - p1 / pp;
        } while (std::abs(z - z1) > 1e-15);
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        r.w[n - 1 - i] = r.w[i];
    }
    return r;
}

inline const QuadRule& cached_rule(int n, std::map<int, QuadRule>& cache,
                                   std::mutex& mtx, QuadRule (*maker)(int)) {
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, maker(n)).first;
    return it->second;
}

} // namespace detail

// cached; map nodes are address-stable so the references stay valid
inline const QuadRule& hermite_rule(int n) {
    static std::map<int, QuadRule> cache;
    static std::mutex mtx;
    return detail::cached_rule(n, cache, mtx, &detail::make_hermite_rule);
}

inline const QuadRule& legendre_rule(int n) {
    static std::map<int, QuadRule> cache;
    static std::mutex mtx;
    return detail::cached_rule(n, cache, mtx, &detail::make_legendre_rule);
}

// composite Gauss-Legendre with `panels` equal panels of the given order
template <class F>
auto panel_integrate(F&& f, double a, double b, int panels, int order)
    -> std::invoke_result_t<F, double> {
    using R = std::invoke_result_t<F, double>;
    const QuadRule& gl = legendre_rule(order);
    R total{};
    double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * h;
        double mid = lo + 0.5 * h;
        for (int i = 0; i < order; ++i) {
            total += R(gl.w[i] * 0.5 * h) * f(mid + 0.5 * h * gl.x[i]);
        }
    }
    return total;
}

template <class T>
struct Integral {
    T value{};
    double est_error = 0.0;
    bool converged = false;
};

// panel doubling until |I_{2p} - I_p| <= max(atol, rtol*|I_{2p}|)
template <class F>
auto integrate_adaptive(F&& f, double a, double b, double atol, double rtol,
                        int order = 16, int start_panels = 4, int max_panels = 4096)
    -> Integral<std::invoke_result_t<F, double>> {
    using R = std::invoke_result_t<F, double>;
    Integral<R> res;
    int p = start_panels;
    R prev = panel_integrate(f, a, b, p, order);
    while (2 * p <= max_panels) {
        p *= 2;
        R cur = panel_integrate(f, a, b, p, order);
        double diff = std::abs(cur - prev);
        res.value = cur;
        res.est_error = diff;
        if (diff <= std::max(atol, rtol * std::abs(cur))) {
            res.converged = true;
            return res;
        }
        prev = cur;
    }
    return res;
}

// (1/2pi i) contour integral over the circle |z - c| = R, midpoint trapezoid,
// M nodes. Spectrally accurate for integrands analytic near the circle.
template <class F>
Complex circle_trapezoid(F&& f, Complex c, double R, int M) {
    Complex total{};
    for (int m = 0; m < M; ++m) {
        double th = 2.0 * PI * (m + 0.5) / M;
        Complex e(std::cos(th), std::sin(th));
        total += e * f(c + R * e);
    }
    return total * (R / double(M));
}

} // namespace dyson
