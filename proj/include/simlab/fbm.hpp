#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "simlab/grid.hpp"
#include "simlab/linalg.hpp"
#include "simlab/model.hpp"
#include "simlab/rng.hpp"

namespace simlab {

// Covariance of fractional Brownian motion: (t^{2H} + s^{2H} - |t-s|^{2H})/2.
inline double fbm_cov(double s, double t, double H) {
    if (!(H > 0.0 && H < 1.0)) throw std::domain_error("fbm_cov: H outside (0,1)");
    if (s < 0.0 || t < 0.0) throw std::domain_error("fbm_cov: negative time");
    const double h2 = 2.0 * H;
    return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::fabs(t - s), h2));
}

namespace detail {

// Iterative radix-2 complex FFT (unnormalized forward; conjugate trick is not
// needed here). Length must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft_radix2: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double pi = 3.14159265358979323846;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Autocovariance of the stationary increment sequence on step h:
// gamma(k) = (h^{2H}/2) (|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}).
inline double fgn_autocov(std::size_t k, double h, double H) {
    const double h2 = 2.0 * H;
    const double kk = static_cast<double>(k);
    return 0.5 * std::pow(h, h2) *
           (std::pow(kk + 1.0, h2) + std::pow(std::fabs(kk - 1.0), h2) -
            2.0 * std::pow(kk, h2));
}

}  // namespace detail

struct FbmEnsemble {
    std::vector<std::vector<double>> paths;  // [replication][grid node], node 0 = 0
    bool circulant_fallback = false;         // spectrum check failed, used Cholesky
    double min_spectrum = 0.0;               // smallest circulant eigenvalue seen
    double chol_jitter = 0.0;                // jitter applied on the Cholesky route
};

/*
 * Exact fractional Brownian paths on a uniform grid.
 *
 * circulant: embed the increment autocovariance in a circulant of power-of-two
 * size >= 2N; its FFT spectrum is the eigenvalue list, which must be
 * nonnegative (holds for H in (1/2,1); checked, with Cholesky fallback and a
 * warning record otherwise). Each path spends one FFT of independent complex
 * normals: the real part of FFT(sqrt(lambda) zeta)/sqrt(M) restricted to the
 * first N lags is a stationary block with the target autocovariance.
 *
 * cholesky: factor the node covariance matrix directly.
 */
inline FbmEnsemble sample_fbm(const TimeGrid& grid, double H, std::size_t M,
                              std::uint64_t seed, const std::string& method = "circulant") {
    if (!(H > 0.0 && H < 1.0)) throw std::domain_error("sample_fbm: H outside (0,1)");
    const std::size_t N = grid.steps;  // number of increments
    const std::size_t G = grid.size();
    const double h = grid.step();
    FbmEnsemble ens;
    ens.paths.assign(M, std::vector<double>(G, 0.0));

    bool use_circulant = (method == "circulant");
    if (!use_circulant && method != "cholesky")
        throw std::invalid_argument("sample_fbm: unknown method " + method);

    if (use_circulant) {
        const std::size_t Mc = detail::next_pow2(2 * N);
        std::vector<std::complex<double>> c(Mc);
        for (std::size_t j = 0; j < Mc; ++j) {
            const std::size_t lag = std::min(j, Mc - j);
            c[j] = detail::fgn_autocov(lag, h, H);
        }
        detail::fft_radix2(c);
        double min_eig = c[0].real(), max_eig = c[0].real();
        for (const auto& z : c) {
            min_eig = std::min(min_eig, z.real());
            max_eig = std::max(max_eig, z.real());
        }
        ens.min_spectrum = min_eig;
        if (min_eig < -1e-10 * std::max(1.0, max_eig)) {
            use_circulant = false;
            ens.circulant_fallback = true;
        } else {
            std::vector<double> root(Mc);
            for (std::size_t j = 0; j < Mc; ++j)
                root[j] = std::sqrt(std::max(0.0, c[j].real()) / static_cast<double>(Mc));
            std::vector<std::complex<double>> buf(Mc);
            for (std::size_t r = 0; r < M; ++r) {
                Rng rng(replication_seed(seed, r));
                for (std::size_t j = 0; j < Mc; ++j)
                    buf[j] = root[j] * std::complex<double>(rng.normal(), rng.normal());
                detail::fft_radix2(buf);
                double acc = 0.0;
                for (std::size_t k = 1; k < G; ++k) {
                    acc += buf[k - 1].real();
                    ens.paths[r][k] = acc;
                }
            }
            return ens;
        }
    }

    // Cholesky route (direct factorization of the node covariance)
    Matrix C(G);
    for (std::size_t i = 0; i < G; ++i)
        for (std::size_t j = 0; j < G; ++j) C(i, j) = fbm_cov(grid.time(i), grid.time(j), H);
    const CholeskyResult ch = cholesky_jitter(C);
    ens.chol_jitter = ch.jitter;
    std::vector<double> z(G);
    for (std::size_t r = 0; r < M; ++r) {
        Rng rng(replication_seed(seed, r));
        for (std::size_t i = 0; i < G; ++i) z[i] = rng.normal();
        ens.paths[r] = lower_times(ch.L, z);
    }
    return ens;
}

}  // namespace simlab
