#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "dyson/errors.hpp"
#include "dyson/linalg.hpp"
#include "dyson/quadrature.hpp"

namespace dyson {

inline double factorial(int n) {
    if (n < 0) throw invalid_parameter("factorial of negative");
    static const std::vector<double> table = [] {
        std::vector<double> t(171);
        t[0] = 1.0;
        for (int i = 1; i <= 170; ++i) t[i] = t[i - 1] * i;
        return t;
    }();
    if (n <= 170) return table[n];
    throw invalid_parameter("factorial overflow");
}

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// ----- heat kernel -------------------------------------------------------

inline double heat_kernel(double t, double y, double x) {
    if (!(t > 0.0)) throw invalid_parameter("heat_kernel needs t > 0");
    double d = y - x;
    return std::exp(-d * d / (2.0 * t)) / std::sqrt(2.0 * PI * t);
}

inline Complex heat_kernel(double t, Complex y, Complex x) {
    if (!(t > 0.0)) throw invalid_parameter("heat_kernel needs t > 0");
    Complex d = y - x;
    return std::exp(-d * d / (2.0 * t)) / std::sqrt(2.0 * PI * t);
}

// ----- Hermite polynomials ----------------------------------------------

// physicists' H_j; explicit series for j <= 20, three-term recurrence beyond
template <class T>
T hermite(int j, T x) {
    if (j < 0) throw invalid_parameter("hermite degree < 0");
    if (j <= 20) {
        T sum{};
        T x2 = 2.0 * x;
        for (int k = 0; k <= j / 2; ++k) {
            double coef = factorial(j) / (factorial(k) * factorial(j - 2 * k));
            if (k % 2) coef = -coef;
            T pw = T(1.0);
            for (int i = 0; i < j - 2 * k; ++i) pw *= x2;
            sum += coef * pw;
        }
        return sum;
    }
    T hm1 = hermite(20, x), hm2 = hermite(19, x);
    for (int k = 20; k < j; ++k) {
        T h = 2.0 * x * hm1 - 2.0 * double(k) * hm2;
        hm2 = hm1;
        hm1 = h;
    }
    return hm1;
}

// H_0..H_jmax by recurrence
inline std::vector<double> hermite_all(int jmax, double x) {
    std::vector<double> h(jmax + 1);
    h[0] = 1.0;
    if (jmax >= 1) h[1] = 2.0 * x;
    for (int j = 1; j < jmax; ++j) h[j + 1] = 2.0 * x * h[j] - 2.0 * j * h[j - 1];
    return h;
}

// probabilists' He_j(x) = 2^{-j/2} H_j(x/sqrt 2); He_{j+1} = x He_j - j He_{j-1}
template <class T>
T hermite_prob(int j, T x) {
    T hm2 = T(1.0);
    if (j == 0) return hm2;
    T hm1 = x;
    for (int k = 1; k < j; ++k) {
        T h = x * hm1 - double(k) * hm2;
        hm2 = hm1;
        hm1 = h;
    }
    return hm1;
}

// ----- complete symmetric functions --------------------------------------

struct SymmetricFnInput {
    std::vector<Complex> variables;
    Complex sum1{};  // diagnostics
    Complex sum2{};
    size_t truncation_length = 0;

    static SymmetricFnInput from(std::vector<Complex> vars) {
        SymmetricFnInput s;
        s.variables = std::move(vars);
        s.truncation_length = s.variables.size();
        for (const Complex& v : s.variables) {
            s.sum1 += v;
            s.sum2 += v * v;
        }
        return s;
    }
};

// power sums p_i = sum x_j^i for i = 1..imax; slot 0 unused
inline std::vector<Complex> power_sums(const std::vector<Complex>& vars, int imax) {
    std::vector<Complex> p(imax + 1, Complex(0.0));
    for (const Complex& v : vars) {
        Complex acc(1.0);
        for (int i = 1; i <= imax; ++i) {
            acc *= v;
            p[i] += acc;
        }
    }
    return p;
}

// Newton's identity: r h_r = sum_{i=1..r} p_i h_{r-i}
inline std::vector<Complex> h_from_power_sums(int rmax, const std::vector<Complex>& p) {
    std::vector<Complex> h(rmax + 1, Complex(0.0));
    h[0] = 1.0;
    for (int r = 1; r <= rmax; ++r) {
        Complex acc(0.0);
        for (int i = 1; i <= r; ++i) acc += p[i] * h[r - i];
        h[r] = acc / double(r);
    }
    return h;
}

inline std::vector<double> h_from_power_sums(int rmax, const std::vector<double>& p) {
    std::vector<double> h(rmax + 1, 0.0);
    h[0] = 1.0;
    for (int r = 1; r <= rmax; ++r) {
        double acc = 0.0;
        for (int i = 1; i <= r; ++i) acc += p[i] * h[r - i];
        h[r] = acc / double(r);
    }
    return h;
}

inline Complex complete_symmetric(int r, const SymmetricFnInput& input) {
    if (r < 0) return Complex(0.0);
    if (r == 0) return Complex(1.0);
    auto p = power_sums(input.variables, r);
    return h_from_power_sums(r, p)[r];
}

// ----- Schur functions, Frobenius notation (k|l) --------------------------

// Jacobi-Trudi for lambda = (k+1, 1^l): det[h_{lambda_i - i + j}], size l+1.
// h is indexed by subscript; needs entries up to k+1+l.
inline Complex schur_from_h(int k, int l, const std::vector<Complex>& h, int nvars) {
    if (k < 0 || l < 0) throw invalid_parameter("negative Frobenius coordinates");
    if (l + 1 > nvars) return Complex(0.0);
    int sz = l + 1;
    auto hval = [&](int idx) -> Complex {
        if (idx < 0) return Complex(0.0);
        if (idx >= int(h.size())) throw invalid_parameter("h table too short");
        return h[idx];
    };
    Mat<Complex> m(sz);
    for (int i = 1; i <= sz; ++i) {
        int lam = (i == 1) ? k + 1 : 1;
        for (int j = 1; j <= sz; ++j) m(i - 1, j - 1) = hval(lam - i + j);
    }
    return det(m);
}

inline double schur_frobenius(int k, int l, const std::vector<double>& vars) {
    int n = int(vars.size());
    // s_lambda vanishes when the partition has more rows than variables; the
    // hook (k+1, 1^l) has l+1 rows.  The arm length k does not matter here.
    if (l + 1 > n) return 0.0;

    double scale = 0.0, mingap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        scale = std::max(scale, std::abs(vars[i]));
        for (int j = i + 1; j < n; ++j) mingap = std::min(mingap, std::abs(vars[i] - vars[j]));
    }
    bool distinct = n < 2 || mingap > 1e-9 * std::max(1.0, scale);

    if (!distinct) {
        // coincident variables: Jacobi-Trudi has no singularity
        std::vector<Complex> cv(vars.begin(), vars.end());
        auto p = power_sums(cv, k + l + 1);
        auto h = h_from_power_sums(k + l + 1, p);
        return schur_from_h(k, l, h, n).real();
    }

    // bialternant a_{lambda+delta} / a_delta
    std::vector<int> mu(n);
    for (int i = 0; i < n; ++i) {
        int lam = (i == 0) ? k + 1 : (i <= l ? 1 : 0);
        mu[i] = lam + (n - 1 - i);
    }
    Mat<double> num(n), den(n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            num(i, j) = std::pow(vars[j], mu[i]);
            den(i, j) = std::pow(vars[j], n - 1 - i);
        }
    }
    auto dn = det_lu(den);
    if (dn.det == 0.0) throw numeric_failure("Vandermonde collapsed despite distinct vars");
    return det(num) / dn.det;
}

// ----- Jacobi theta_3 -----------------------------------------------------

struct ThetaArgs {
    Complex v;
    Complex tau;
};

namespace detail {

inline Complex theta3_series(Complex v, Complex tau, double tol) {
    double imt = tau.imag();
    double a = std::abs(v.imag()) / imt;
    int lmax = int(std::ceil(a + std::sqrt(a * a + std::log(1.0 / tol) / (PI * imt)))) + 2;
    const Complex I(0.0, 1.0);
    Complex sum(1.0);
    for (int l = 1; l <= lmax; ++l) {
        Complex q = std::exp(PI * I * tau * double(l) * double(l));
        Complex e = 2.0 * PI * I * v * double(l);
        sum += q * (std::exp(e) + std::exp(-e));
    }
    return sum;
}

} // namespace detail

inline Complex theta3(const ThetaArgs& args, double tol) {
    if (!(args.tau.imag() > 0.0)) throw invalid_parameter("theta3 needs Im(tau) > 0");
    if (!(tol > 0.0)) throw invalid_parameter("theta3 needs tol > 0");
    Complex v = args.v, tau = args.tau;
    if (tau.imag() < 1.0) {
        const Complex I(0.0, 1.0);
        Complex pref = std::exp(-PI * I * v * v / tau) * std::sqrt(I / tau);
        return pref * detail::theta3_series(v / tau, -1.0 / tau, tol);
    }
    return detail::theta3_series(v, tau, tol);
}

// sin(pi z)/(pi z) with the removable singularity filled by series
template <class T>
T sinc_pi(T z) {
    T w = PI * z;
    if (std::abs(w) < 1e-4) {
        T w2 = w * w;
        return T(1.0) - w2 / 6.0 + w2 * w2 / 120.0;
    }
    return std::sin(w) / w;
}

} // namespace dyson
