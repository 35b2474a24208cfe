#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "simlab/model.hpp"

namespace simlab {

// Dense symmetric matrix, row-major full storage. Sizes here are covariance
// grids (hundreds to a few thousand), so plain loops are adequate.
struct Matrix {
    std::size_t n = 0;
    std::vector<double> a;

    Matrix() = default;
    explicit Matrix(std::size_t n_) : n(n_), a(n_ * n_, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

struct CholeskyResult {
    Matrix L;            // lower triangular, zero above diagonal
    double jitter = 0.0; // relative diagonal jitter that made it factorizable
};

// Cholesky with escalating relative diagonal jitter. Covariance grids of
// rough processes are numerically semidefinite at fine resolution; jitter
// starts at `jitter0` times the mean diagonal and multiplies by 10 up to
// `jitter_max`. The applied jitter is reported, never silent.
inline CholeskyResult cholesky_jitter(const Matrix& C, double jitter0 = 1e-14,
                                      double jitter_max = 1e-8) {
    const std::size_t n = C.n;
    double diag_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_scale += C(i, i);
    diag_scale = (n > 0) ? diag_scale / static_cast<double>(n) : 1.0;
    if (diag_scale <= 0.0) diag_scale = 1.0;

    double jitter = 0.0;
    for (int attempt = 0;; ++attempt) {
        CholeskyResult res;
        res.L = Matrix(n);
        res.jitter = jitter;
        const double add = jitter * diag_scale;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = C(i, j) + (i == j ? add : 0.0);
                for (std::size_t k = 0; k < j; ++k) s -= res.L(i, k) * res.L(j, k);
                if (i == j) {
                    if (s <= 0.0) {
                        // exactly-zero leading diagonal (e.g. cov at t=0) is fine
                        if (C(i, i) + add == 0.0 && s == 0.0) {
                            res.L(i, i) = 0.0;
                            continue;
                        }
                        ok = false;
                        break;
                    }
                    res.L(i, i) = std::sqrt(s);
                } else {
                    res.L(i, j) = (res.L(j, j) > 0.0) ? s / res.L(j, j) : 0.0;
                }
            }
        }
        if (ok) return res;
        if (jitter >= jitter_max)
            throw numeric_error("cholesky_jitter: factorization failed at max jitter");
        jitter = (jitter == 0.0) ? jitter0 : jitter * 10.0;
        if (jitter > jitter_max) jitter = jitter_max;
    }
}

// y = L z for lower-triangular L
inline std::vector<double> lower_times(const Matrix& L, const std::vector<double>& z) {
    const std::size_t n = L.n;
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) s += L(i, j) * z[j];
        y[i] = s;
    }
    return y;
}

}  // namespace simlab
