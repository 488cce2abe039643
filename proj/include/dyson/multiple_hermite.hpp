#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "dyson/configuration.hpp"
#include "dyson/errors.hpp"
#include "dyson/linalg.hpp"
#include "dyson/quadrature.hpp"
#include "dyson/special.hpp"

namespace dyson {

// P_xi(y): the monic type-II multiple Hermite polynomial, deg = xi(R).
// Gauss-Hermite after shifting the Gaussian weight onto the real axis;
// the integrand is a degree-N polynomial, so the rule is exact once
// 2n-1 >= N and the doubling check converges immediately.
inline Complex type2_poly(const Configuration& xi, Complex y) {
    if (!xi.is_finite()) throw precondition_violation("type2_poly needs a finite configuration");
    std::vector<double> xs = xi.expanded();
    if (xs.empty()) return Complex(1.0, 0.0);
    auto eval = [&](int n) {
        const QuadRule& r = hermite_rule(n);
        Complex acc(0.0, 0.0);
        for (int i = 0; i < n; ++i) {
            Complex prod(1.0, 0.0);
            Complex shift(y.real(), y.imag() + std::sqrt(2.0) * r.x[i]);
            for (double xj : xs) prod *= shift - xj;
            acc += r.w[i] * prod;
        }
        return acc / std::sqrt(PI);
    };
    int n = 64;
    Complex a = eval(n);
    while (n < 1024) {
        Complex b = eval(2 * n);
        if (std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b))) return b;
        a = b;
        n *= 2;
    }
    return a;
}

inline double type2_poly(const Configuration& xi, double y) {
    return type2_poly(xi, Complex(y, 0.0)).real();
}

// Q_xi(y): the type-I weight, sum of residues of
// e^{-(y-z)^2/2} / (sqrt(2 pi) prod (z-x)^mult).
// Poles closer than the grouping gap share one trapezoid circle; the residue
// sum does not care how the poles are partitioned, so near-coincident points
// cost nothing.  Each circle stays clear of the poles outside its group.
inline double type1_fn(const Configuration& xi, double y) {
    if (!xi.is_finite()) throw precondition_violation("type1_fn needs a finite configuration");
    std::vector<Atom> atoms = xi.atoms();
    if (atoms.empty()) throw precondition_violation("type1_fn needs xi(R) >= 1");
    auto integrand = [&](Complex z) {
        Complex den(1.0, 0.0);
        for (const Atom& a : atoms)
            for (int m = 0; m < a.mult; ++m) den *= z - a.x;
        Complex d = y - z;
        return std::exp(-0.5 * d * d) / (std::sqrt(2.0 * PI) * den);
    };
    const double group_gap = 0.2;
    double total = 0.0;
    for (size_t lo = 0; lo < atoms.size();) {
        size_t hi = lo;
        while (hi + 1 < atoms.size() && atoms[hi + 1].x - atoms[hi].x < group_gap) ++hi;
        double span = atoms[hi].x - atoms[lo].x;
        double clearance = 2.0;
        if (lo > 0) clearance = std::min(clearance, atoms[lo].x - atoms[lo - 1].x);
        if (hi + 1 < atoms.size()) clearance = std::min(clearance, atoms[hi + 1].x - atoms[hi].x);
        double r = 0.5 * span + std::min(0.45 * clearance, 1.0);
        Complex c(0.5 * (atoms[lo].x + atoms[hi].x), 0.0);
        int M = 64;
        Complex prev = circle_trapezoid(integrand, c, r, M);
        while (M < 2048) {
            Complex cur = circle_trapezoid(integrand, c, r, 2 * M);
            if (std::abs(cur - prev) <= 1e-13 * std::max(1.0, std::abs(cur))) {
                prev = cur;
                break;
            }
            prev = cur;
            M *= 2;
        }
        total += prev.real();
        lo = hi + 1;
    }
    return total;
}

// Nested prefixes xi^N_j of the nondecreasing labeling x_1 <= ... <= x_N.
struct MultiHermiteBasis {
    Configuration base;
    std::vector<double> points;  // expanded ascending
    int N = 0;

    static MultiHermiteBasis from_config(const Configuration& xi) {
        if (!xi.is_finite())
            throw precondition_violation("basis needs a finite configuration");
        MultiHermiteBasis b;
        b.base = xi;
        b.points = xi.expanded();
        b.N = int(b.points.size());
        return b;
    }

    Configuration prefix(int j) const {
        if (j < 0 || j > N) throw invalid_parameter("prefix index out of range");
        std::vector<Atom> atoms;
        for (int i = 0; i < j; ++i) {
            if (!atoms.empty() && atoms.back().x == points[i])
                atoms.back().mult += 1;
            else
                atoms.push_back({points[i], 1});
        }
        return Configuration::finite(std::move(atoms));
    }
};

// H_j^{(-)} = P_{xi_j}, H_j^{(+)} = Q_{xi_{j+1}}
inline Complex h_minus(const MultiHermiteBasis& b, int j, Complex y) {
    if (j < 0 || j > b.N) throw invalid_parameter("h_minus degree out of range");
    return type2_poly(b.prefix(j), y);
}

inline double h_minus(const MultiHermiteBasis& b, int j, double y) {
    return h_minus(b, j, Complex(y, 0.0)).real();
}

inline double h_plus(const MultiHermiteBasis& b, int j, double y) {
    if (j < 0 || j >= b.N) throw invalid_parameter("h_plus index out of range");
    return type1_fn(b.prefix(j + 1), y);
}

inline double phi_minus(double t, double x, int j, const MultiHermiteBasis& b) {
    if (!(t > 0.0)) throw invalid_parameter("phi_minus needs t > 0");
    double rt = std::sqrt(t);
    return std::pow(t, 0.5 * j) * type2_poly(b.prefix(j).dilated(1.0 / rt), x / rt);
}

inline double phi_plus(double t, double x, int j, const MultiHermiteBasis& b) {
    if (!(t > 0.0)) throw invalid_parameter("phi_plus needs t > 0");
    if (j < 0 || j >= b.N) throw invalid_parameter("phi_plus index out of range");
    double rt = std::sqrt(t);
    return std::pow(t, -0.5 * (j + 1)) * type1_fn(b.prefix(j + 1).dilated(1.0 / rt), x / rt);
}

inline double biorth_pair(const MultiHermiteBasis& b, int j, int k) {
    if (j < 0 || j >= b.N || k < 0 || k >= b.N)
        throw invalid_parameter("biorth_pair indices out of range");
    Configuration pj = b.prefix(j);
    Configuration pk = b.prefix(k + 1);
    double lo = b.points.front() - 12.0;
    double hi = b.points.back() + 12.0;
    auto f = [&](double y) { return type2_poly(pj, y) * type1_fn(pk, y); };
    Integral<double> I = integrate_adaptive(f, lo, hi, 1e-10, 1e-10, 16, 8, 4096);
    if (!I.converged)
        throw numeric_failure("biorthogonality quadrature did not converge, est_error " +
                              std::to_string(I.est_error));
    return I.value;
}

// a_delta(x) = prod_{j<k} (x_j - x_k); equals (-1)^{N(N-1)/2} times the
// ascending Vandermonde, and mu^{(-)} below reproduces it exactly.
inline double a_delta(const std::vector<double>& x) {
    double p = 1.0;
    for (size_t j = 0; j < x.size(); ++j)
        for (size_t k = j + 1; k < x.size(); ++k) p *= x[j] - x[k];
    return p;
}

struct DetIdentityResult {
    double lhs = 0.0;
    double rhs = 0.0;
};

// Both sides of the Gaussian determinant identity.  For repeated base
// points the lhs is the confluent limit: occurrence i contributes the row
// He_i(y - x~) e^{-(y - x~)^2/2} / i!, each size-g group carries the sign
// (-1)^{g(g-1)/2}, and only cross-group differences divide out.
inline DetIdentityResult det_identity_check(const MultiHermiteBasis& b,
                                            const std::vector<double>& ys) {
    int N = b.N;
    if (int(ys.size()) != N) throw invalid_parameter("need exactly N evaluation points");
    for (int i = 0; i + 1 < N; ++i)
        if (!(ys[i] < ys[i + 1])) throw invalid_parameter("y must be strictly increasing");

    DetIdentityResult res;

    Mat<double> R(N);
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) R(j, k) = h_plus(b, j, ys[k]);
    double sgn = (N * (N - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    res.rhs = sgn * std::pow(2.0 * PI, 0.5 * N) * det_lu(R).det;

    struct Group {
        double x;
        int size;
    };
    std::vector<Group> groups;
    for (double x : b.points) {
        if (!groups.empty() && groups.back().x == x)
            groups.back().size += 1;
        else
            groups.push_back({x, 1});
    }
    Mat<double> Lm(N);
    int row = 0;
    double sign = 1.0;
    for (const Group& g : groups) {
        if ((g.size * (g.size - 1) / 2) % 2 != 0) sign = -sign;
        for (int i = 0; i < g.size; ++i, ++row) {
            double fi = factorial(i);
            for (int k = 0; k < N; ++k) {
                double d = ys[k] - g.x;
                Lm(row, k) = hermite_prob(i, d) * std::exp(-0.5 * d * d) / fi;
            }
        }
    }
    double cross = 1.0;
    for (size_t a = 0; a < groups.size(); ++a)
        for (size_t c = a + 1; c < groups.size(); ++c)
            cross *= std::pow(groups[a].x - groups[c].x, groups[a].size * groups[c].size);
    res.lhs = sign * det_lu(Lm).det / cross;
    return res;
}

// mu^{(+-)}(t, x) = det[phi^{(+-)}_{j-1}(t, x_k)]
inline double mu_minus(const MultiHermiteBasis& b, double t, const std::vector<double>& x) {
    int N = b.N;
    if (int(x.size()) != N) throw invalid_parameter("mu_minus needs N points");
    Mat<double> M(N);
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) M(j, k) = phi_minus(t, x[k], j, b);
    return det_lu(M).det;
}

inline double mu_plus(const MultiHermiteBasis& b, double t, const std::vector<double>& x) {
    int N = b.N;
    if (int(x.size()) != N) throw invalid_parameter("mu_plus needs N points");
    Mat<double> M(N);
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) M(j, k) = phi_plus(t, x[k], j, b);
    return det_lu(M).det;
}

} // namespace dyson
