#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "dyson/errors.hpp"

namespace dyson {

// dense row-major square matrix, desk sizes only
template <class T>
struct Mat {
    int n = 0;
    std::vector<T> a;

    Mat() = default;
    explicit Mat(int n_) : n(n_), a(size_t(n_) * n_, T{}) {}

    T& operator()(int i, int j) { return a[size_t(i) * n + j]; }
    const T& operator()(int i, int j) const { return a[size_t(i) * n + j]; }
};

template <class T>
struct DetResult {
    T det{};
    double rcond = 0.0;  // min|pivot| / max|pivot|
    bool near_singular = false;
};

// LU with partial pivoting; reports a condition diagnostic instead of failing
// on near-singular input.
template <class T>
DetResult<T> det_lu(Mat<T> m) {
    DetResult<T> r;
    int n = m.n;
    if (n == 0) {
        r.det = T(1);
        r.rcond = 1.0;
        return r;
    }
    T det = T(1);
    double minp = 0.0, maxp = 0.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::abs(m(col, col));
        for (int i = col + 1; i < n; ++i) {
            double v = std::abs(m(i, col));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(m(col, j), m(piv, j));
            det = -det;
        }
        T p = m(col, col);
        double ap = std::abs(p);
        if (col == 0) {
            minp = maxp = ap;
        } else {
            minp = std::min(minp, ap);
            maxp = std::max(maxp, ap);
        }
        if (ap == 0.0) {
            r.det = T(0);
            r.rcond = 0.0;
            r.near_singular = true;
            return r;
        }
        det *= p;
        for (int i = col + 1; i < n; ++i) {
            T f = m(i, col) / p;
            for (int j = col + 1; j < n; ++j) m(i, j) -= f * m(col, j);
        }
    }
    r.det = det;
    r.rcond = maxp > 0.0 ? minp / maxp : 0.0;
    r.near_singular = r.rcond < 1e-13;
    return r;
}

template <class T>
T det(const Mat<T>& m) {
    return det_lu(m).det;
}

} // namespace dyson
