#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dyson/errors.hpp"
#include "dyson/kernels.hpp"
#include "dyson/linalg.hpp"
#include "dyson/multiple_hermite.hpp"
#include "dyson/quadrature.hpp"
#include "dyson/special.hpp"

namespace dyson {

struct CorrelationRequest {
    std::vector<double> times;                // strictly increasing, positive
    std::vector<std::vector<double>> points;  // per-time evaluation points
    KernelSpec kernel;
};

namespace detail {

inline void require_times(const std::vector<double>& times) {
    if (times.empty()) throw invalid_parameter("need at least one time");
    double prev = 0.0;
    for (double t : times) {
        if (!(t > prev)) throw invalid_parameter("times must be strictly increasing and positive");
        prev = t;
    }
}

} // namespace detail

// S^{m,n}(x,y) = sum_{j<N} phi_j^{(+)}(t_m, x) phi_j^{(-)}(t_n, y)
inline double smn_kernel(const MultiHermiteBasis& basis, double tm, double x, double tn,
                         double y) {
    double acc = 0.0;
    for (int j = 0; j < basis.N; ++j)
        acc += phi_plus(tm, x, j, basis) * phi_minus(tn, y, j, basis);
    return acc;
}

inline double stilde_kernel(const MultiHermiteBasis& basis, double tm, double x, double tn,
                            double y) {
    double v = smn_kernel(basis, tm, x, tn, y);
    if (tm > tn) v -= heat_kernel(tm - tn, x, y);
    return v;
}

// Karlin-McGregor transition weight det[p(t, y_j | x_k)]
inline double km_determinant(double t, const std::vector<double>& y,
                             const std::vector<double>& x) {
    if (!(t > 0.0)) throw invalid_parameter("km_determinant needs t > 0");
    if (y.size() != x.size()) throw invalid_parameter("km_determinant needs equal sizes");
    int n = int(y.size());
    for (int i = 1; i < n; ++i)
        if (!(y[i] > y[i - 1]) || !(x[i] > x[i - 1]))
            throw invalid_parameter("km_determinant vectors must be strictly increasing");
    Mat<double> m(n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) m(j, k) = heat_kernel(t, y[j], x[k]);
    return det(m);
}

// multitime density mu^{(-)}(t_M) prod f_N mu^{(+)}(t_1); confluent initial
// configurations enter through mu^{(+)}
inline double multitime_density(const MultiHermiteBasis& basis, const std::vector<double>& times,
                                std::vector<std::vector<double>> configs) {
    detail::require_times(times);
    if (configs.size() != times.size())
        throw invalid_parameter("one configuration per time required");
    size_t M = times.size();
    for (auto& c : configs) {
        if (int(c.size()) != basis.N)
            throw invalid_parameter("each configuration needs exactly N points");
        std::sort(c.begin(), c.end());
    }
    double v = mu_minus(basis, times[M - 1], configs[M - 1]);
    for (size_t m = 0; m + 1 < M; ++m)
        v *= km_determinant(times[m + 1] - times[m], configs[m + 1], configs[m]);
    v *= mu_plus(basis, times[0], configs[0]);
    return v;
}

// block determinant of kernel values over all (time, point) pairs
inline double correlation_det(const CorrelationRequest& req) {
    detail::require_times(req.times);
    if (req.points.size() != req.times.size())
        throw invalid_parameter("one point list per time required");
    std::vector<SpaceTimePoint> pts;
    for (size_t m = 0; m < req.times.size(); ++m)
        for (double x : req.points[m]) pts.push_back({req.times[m], x});
    int n = int(pts.size());
    if (n == 0) return 1.0;
    Mat<double> mat(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            mat(i, j) = eval_kernel(req.kernel, pts[i], pts[j]).value;
    return det(mat);
}

inline double rho1(const KernelSpec& spec, double t, double x) {
    return eval_kernel(spec, {t, x}, {t, x}).value;
}

inline double rho2(const KernelSpec& spec, double t, double x, double y) {
    KernelValue kxx = eval_kernel(spec, {t, x}, {t, x});
    KernelValue kxy = eval_kernel(spec, {t, x}, {t, y});
    KernelValue kyx = eval_kernel(spec, {t, y}, {t, x});
    KernelValue kyy = eval_kernel(spec, {t, y}, {t, y});
    return kxx.value * kyy.value - kxy.value * kyx.value;
}

inline double rho_two_time(const KernelSpec& spec, double t1, double x, double t2, double y) {
    KernelValue kxx = eval_kernel(spec, {t1, x}, {t1, x});
    KernelValue kxy = eval_kernel(spec, {t1, x}, {t2, y});
    KernelValue kyx = eval_kernel(spec, {t2, y}, {t1, x});
    KernelValue kyy = eval_kernel(spec, {t2, y}, {t2, y});
    return kxx.value * kyy.value - kxy.value * kyx.value;
}

// ----- truncated Fredholm generating function ---------------------------------

// tabulated compactly supported test function, linear interpolation
struct TestFunction {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> values;

    static TestFunction indicator(double lo, double hi, double amplitude) {
        return {lo, hi, {amplitude, amplitude}};
    }

    bool zero() const {
        for (double v : values)
            if (v != 0.0) return false;
        return values.empty() || hi <= lo;
    }

    double at(double x) const {
        if (values.empty() || x < lo || x > hi || hi <= lo) return 0.0;
        if (values.size() == 1) return values[0];
        double u = (x - lo) / (hi - lo) * double(values.size() - 1);
        size_t i = std::min(size_t(u), values.size() - 2);
        double f = u - double(i);
        return values[i] * (1.0 - f) + values[i + 1] * f;
    }
};

struct GeneratingFnRequest {
    std::vector<double> times;
    std::vector<TestFunction> chi;  // one per time
    int order = 4;                  // max total points in the expansion
    Configuration config;           // finite
    int nodes = 32;                 // Gauss-Legendre nodes per support
};

// Expansion sum over (N_1..N_M), total <= order, of (1/prod N_m!) int prod chi
// det[Stilde].  Discretizing every integral with the same Gauss-Legendre rule
// and regrouping by multilinearity turns the truncated sum into the elementary
// symmetric functions e_0 + ... + e_order of the discretized operator, which
// Newton's identities give from traces of its powers.
inline double generating_fn_truncated(const GeneratingFnRequest& req) {
    detail::require_times(req.times);
    if (req.chi.size() != req.times.size())
        throw invalid_parameter("one test function per time required");
    if (req.order < 0 || req.order > 6)
        throw invalid_parameter("truncation order must lie in [0, 6]");
    if (!req.config.is_finite())
        throw precondition_violation("generating function needs a finite configuration");
    MultiHermiteBasis basis = MultiHermiteBasis::from_config(req.config);

    struct Node {
        size_t m;
        double x, w;
    };
    std::vector<Node> nodes;
    const QuadRule& gl = legendre_rule(req.nodes);
    for (size_t m = 0; m < req.chi.size(); ++m) {
        const TestFunction& c = req.chi[m];
        if (c.zero()) continue;
        double mid = 0.5 * (c.hi + c.lo), half = 0.5 * (c.hi - c.lo);
        for (int i = 0; i < req.nodes; ++i)
            nodes.push_back({m, mid + half * gl.x[i], half * gl.w[i]});
    }
    size_t T = nodes.size();
    if (T == 0 || req.order == 0) return 1.0;

    Mat<double> B{int(T)};
    for (size_t a = 0; a < T; ++a)
        for (size_t b = 0; b < T; ++b)
            B(int(a), int(b)) = stilde_kernel(basis, req.times[nodes[a].m], nodes[a].x,
                                              req.times[nodes[b].m], nodes[b].x) *
                                req.chi[nodes[b].m].at(nodes[b].x) * nodes[b].w;

    std::vector<double> tr(size_t(req.order) + 1, 0.0);
    Mat<double> P = B;
    for (int k = 1; k <= req.order; ++k) {
        double s = 0.0;
        for (size_t i = 0; i < T; ++i) s += P(int(i), int(i));
        tr[size_t(k)] = s;
        if (k < req.order) {
            Mat<double> Q{int(T)};
            for (size_t i = 0; i < T; ++i)
                for (size_t j = 0; j < T; ++j) {
                    double acc = 0.0;
                    for (size_t l = 0; l < T; ++l) acc += P(int(i), int(l)) * B(int(l), int(j));
                    Q(int(i), int(j)) = acc;
                }
            P = Q;
        }
    }
    std::vector<double> e(size_t(req.order) + 1, 0.0);
    e[0] = 1.0;
    for (int n = 1; n <= req.order; ++n) {
        double acc = 0.0;
        for (int k = 1; k <= n; ++k)
            acc += (k % 2 == 1 ? 1.0 : -1.0) * e[size_t(n - k)] * tr[size_t(k)];
        e[size_t(n)] = acc / double(n);
    }
    double total = 0.0;
    for (double v : e) total += v;
    return total;
}

// ----- moderate-convergence distance -------------------------------------------

struct ComplexBox {
    double re_lo = -1.0, re_hi = 1.0;
    double im_lo = -1.0, im_hi = 1.0;
    int grid = 9;
};

// sup over a grid of the box of |Phi(xi_a, i, z) - Phi(xi_b, i, z)|
inline double phi_moderate_distance(const Configuration& xi_a, const Configuration& xi_b,
                                    const ComplexBox& box, double tol = 1e-10) {
    if (box.grid < 2) throw invalid_parameter("box grid needs at least 2 points per side");
    Complex ref(0.0, 1.0);
    double sup = 0.0;
    for (int i = 0; i < box.grid; ++i)
        for (int j = 0; j < box.grid; ++j) {
            double re = box.re_lo + (box.re_hi - box.re_lo) * i / (box.grid - 1);
            double im = box.im_lo + (box.im_hi - box.im_lo) * j / (box.grid - 1);
            Complex z(re, im);
            sup = std::max(sup, std::abs(phi_entire(xi_a, ref, z, tol) -
                                         phi_entire(xi_b, ref, z, tol)));
        }
    return sup;
}

} // namespace dyson
