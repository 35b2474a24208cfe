#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "simlab/csv.hpp"
#include "simlab/fbm.hpp"
#include "simlab/grid.hpp"
#include "simlab/linalg.hpp"
#include "simlab/model.hpp"
#include "simlab/quadrature.hpp"
#include "simlab/rng.hpp"

namespace simlab {

// Parameters of the long-run fractional Ornstein-Uhlenbeck description:
// mean reversion kappa, Hurst index H, diffusion scale sigma, and the
// stationary variance sigma0sq.
struct FouConstants {
    double kappa = 0.0;
    double H = 0.0;
    double sigma = 0.0;
    double sigma0sq = 0.0;
};

namespace detail {

inline void require_ba(const ModelParams& p, const char* who) {
    if (!p.b_equals_a())
        throw unsupported_error(std::string(who) + ": requires b = a = 1/(theta (beta-2))");
}

}  // namespace detail

/*
 * kappa = a g'(0), H = (4-beta)/2, sigma^2 = 2 theta^{1-beta} /
 * (d (beta-2)(3-beta)(4-beta)). The stationary variance is evaluated by 2-D
 * quadrature of (theta^{1-beta}/(d(beta-2))) Int Int e^{-kappa(u+v)}
 * |u-v|^{2-beta} du dv over the quadrant (inner integral made smooth by the
 * exact power substitution, outer truncated where e^{-2 kappa v} is
 * negligible), which the reduced closed form theta^{1-beta} Gamma(3-beta) /
 * (d (beta-2) kappa^{4-beta}) must reproduce; tests pin both routes together.
 */
inline FouConstants fou_constants(const ModelParams& p, const Policy& g) {
    detail::require_ba(p, "fou_constants");
    FouConstants c;
    const double beta = p.beta;
    c.kappa = p.a() * g.gp(0.0);
    c.H = 0.5 * (4.0 - beta);
    c.sigma = std::sqrt(2.0 * std::pow(p.theta, 1.0 - beta) /
                        (p.d * (beta - 2.0) * (3.0 - beta) * (4.0 - beta)));
    const double pref = std::pow(p.theta, 1.0 - beta) / (p.d * (beta - 2.0));
    const double kap = c.kappa;
    const double L = 45.0 / kap;  // e^{-2 kappa v} < 1e-39 past here
    // Int_0^v e^{kappa w} w^{2-beta} dw via the power substitution, then the
    // outer v-integral of 2 e^{-2 kappa v} (inner) adaptively on [0, L]
    auto inner = [&](double v) {
        return integrate_power_right_of([&](double w) { return std::exp(kap * w); }, 0.0, v,
                                        2.0 - beta, {1e-11, 1e-300, 48});
    };
    c.sigma0sq =
        pref * 2.0 *
        integrate([&](double v) { return std::exp(-2.0 * kap * v) * inner(v); }, 0.0, L,
                  {1e-10, 1e-14, 48});
    return c;
}

// Closed-form counterpart of the quadrature above; exposed so tests and
// reports can show both numbers side by side.
inline double fou_sigma0sq_closed(const ModelParams& p, const Policy& g) {
    detail::require_ba(p, "fou_sigma0sq_closed");
    const double beta = p.beta;
    const double kap = p.a() * g.gp(0.0);
    return std::pow(p.theta, 1.0 - beta) * std::tgamma(3.0 - beta) /
           (p.d * (beta - 2.0) * std::pow(kap, 4.0 - beta));
}

/*
 * cov(B_H(t), Z_inf(0)) = (theta^{1-beta}/(sigma d (beta-2)))
 *     Int_0^t Int_0^inf e^{-kappa v} (u+v)^{2-beta} dv du.
 * Fubini over {w = u+v >= u} collapses it to one integral:
 *     (1/kappa) [ Int_0^t w^{2-beta} (1-e^{-kappa w}) dw
 *               + (e^{kappa t}-1) Int_t^inf w^{2-beta} e^{-kappa w} dw ].
 */
inline double cross_cov_BH_Z0(double t, const FouConstants& c, const ModelParams& p,
                              const Policy&) {
    detail::require_ba(p, "cross_cov_BH_Z0");
    if (t < 0.0) throw std::domain_error("cross_cov_BH_Z0: negative time");
    if (t == 0.0) return 0.0;
    const double beta = p.beta;
    const double kap = c.kappa;
    const double head = integrate_power_right_of(
        [&](double w) { return -std::expm1(-kap * w) / w; }, 0.0, t, 3.0 - beta,
        {1e-11, 1e-300, 48});
    const double L = t + 45.0 / kap;
    const double tail = integrate(
        [&](double w) { return std::pow(w, 2.0 - beta) * std::exp(-kap * w); }, t, L,
        {1e-11, 1e-300, 48});
    const double pref = std::pow(p.theta, 1.0 - beta) / (c.sigma * p.d * (beta - 2.0));
    return pref * (head + (std::exp(kap * t) - 1.0) * tail) / kap;
}

struct FouEnsemble {
    std::vector<std::vector<double>> Z;   // [replication][grid node]
    std::vector<std::vector<double>> BH;  // matching driver paths
    double chol_jitter = 0.0;
};

/*
 * Stationary-start sampler: the pair (Z(0), B_H(t_1..t_N)) is jointly Gaussian
 * with Var Z(0) = sigma0sq, the fBm covariance block, and the cross
 * covariances sigma-free from cross_cov_BH_Z0; one Cholesky of the joint
 * matrix per call. The path then advances by variation of constants,
 *   Z(t_{k+1}) = e^{-kD} Z(t_k) + sigma [ B_{k+1} - e^{-kD} B_k
 *                 - kappa (D/2)(e^{-kD} B_k + B_{k+1}) ],
 * the bracket being the integration-by-parts form of
 * Int e^{-kappa(t_{k+1}-s)} dB with a trapezoid on the Riemann remainder.
 */
inline FouEnsemble sample_fou(const TimeGrid& grid, const FouConstants& c,
                              const ModelParams& p, const Policy& g, std::size_t M,
                              std::uint64_t seed) {
    detail::require_ba(p, "sample_fou");
    const std::size_t N = grid.steps;
    const std::size_t G = grid.size();
    const double D = grid.step();
    const double kap = c.kappa;

    Matrix C(N + 1);  // index 0: Z(0); 1..N: B_H(t_1..t_N)
    C(0, 0) = c.sigma0sq;
    for (std::size_t k = 1; k <= N; ++k) {
        // sigma = 0 decouples the driver entirely: Z is pure decay from Z(0)
        const double cc = (c.sigma == 0.0) ? 0.0 : cross_cov_BH_Z0(grid.time(k), c, p, g);
        C(0, k) = cc;
        C(k, 0) = cc;
    }
    for (std::size_t i = 1; i <= N; ++i)
        for (std::size_t j = 1; j <= N; ++j) C(i, j) = fbm_cov(grid.time(i), grid.time(j), c.H);
    const CholeskyResult ch = cholesky_jitter(C);

    FouEnsemble ens;
    ens.chol_jitter = ch.jitter;
    ens.Z.assign(M, std::vector<double>(G, 0.0));
    ens.BH.assign(M, std::vector<double>(G, 0.0));
    const double e = std::exp(-kap * D);
    std::vector<double> z(N + 1);
    for (std::size_t r = 0; r < M; ++r) {
        Rng rng(replication_seed(seed, r));
        for (std::size_t i = 0; i <= N; ++i) z[i] = rng.normal();
        const std::vector<double> joint = lower_times(ch.L, z);
        auto& Z = ens.Z[r];
        auto& B = ens.BH[r];
        Z[0] = joint[0];
        for (std::size_t k = 1; k <= N; ++k) B[k] = joint[k];
        for (std::size_t k = 0; k < N; ++k) {
            const double incr =
                B[k + 1] - e * B[k] - kap * (D / 2.0) * (e * B[k] + B[k + 1]);
            Z[k + 1] = e * Z[k] + c.sigma * incr;
        }
    }
    return ens;
}

/*
 * Finite-horizon diagnostics of the long-run limits, all by deterministic
 * quadrature under b = a (intensity along the fluid path identically 1,
 * integrating factor e^{kappa t}):
 *   zbar_var(T)   = E|Zb(T)|^2            -> sigma0sq,
 *   rbar_inc(T,t) = E|Rb(T+t) - Rb(T)|^2  -> sigma^2 t^{4-beta},
 *   cross(T,t)    = cov(Zb(T), Rb(T+t)-Rb(T)) -> sigma cov(B_H(t), Z_inf(0)).
 */
struct LongrunDiag {
    double zbar_var_T = 0.0, zbar_var_limit = 0.0, zbar_gap = 0.0;
    double rbar_inc_T = 0.0, rbar_inc_limit = 0.0, rbar_gap = 0.0;
    double cross_T = 0.0, cross_limit = 0.0, cross_gap = 0.0;
};

namespace detail {

// E|Zb(T)|^2 = (2 theta^{1-beta}/(d kappa)) e^{-2 kappa T}
//              Int_0^T e^{2 kappa v} G(v) dv,
// G(v) = Int_0^v (1 - e^{-kappa w}) w^{1-beta} dw.
inline double zbar_variance_ba(double T, const ModelParams& p, double kap) {
    if (T <= 0.0) return 0.0;
    const double beta = p.beta;
    auto G = [&](double v) {
        return integrate_power_right_of([&](double w) { return -std::expm1(-kap * w) / w; },
                                        0.0, v, 2.0 - beta, {1e-11, 1e-300, 48});
    };
    const double I = integrate(
        [&](double v) { return std::exp(2.0 * kap * (v - T)) * G(v); }, 0.0, T,
        {1e-10, 1e-14, 48});
    return 2.0 * std::pow(p.theta, 1.0 - beta) / (p.d * kap) * I;
}

// station-level b = a covariance of the driving noise divided by d
inline double covRbar_ba(double s, double t, const ModelParams& p) {
    const double beta = p.beta;
    const double sp = std::min(s, t), tp = std::max(s, t);
    if (sp <= 0.0) return 0.0;
    const double q3 = 3.0 - beta, q4 = 4.0 - beta;
    const double A = (2.0 / q3) * std::pow(sp, q4) / q4;
    const double B = std::pow(sp, q4) / ((beta - 2.0) * q4);
    double Cc;
    if (tp == sp) {
        Cc = -B;
    } else {
        const double w0 = tp - sp;
        Cc = -((sp - tp) * (std::pow(tp, q3) - std::pow(w0, q3)) / q3 +
               (std::pow(tp, q4) - std::pow(w0, q4)) / q4) /
             (beta - 2.0);
    }
    return std::pow(p.theta, 1.0 - beta) * (A + B + Cc) / p.d;
}

// cov(Zb(T), Rb(T+t) - Rb(T)) =
// (theta^{1-beta}/(d (beta-2)(3-beta))) Int_0^T e^{-kappa(T-u)}
//   [ (T+t-u)^{3-beta} - (T-u)^{3-beta} - (T+t)^{3-beta} + T^{3-beta} ] du.
inline double cross_zbar_rbar_ba(double T, double t, const ModelParams& p, double kap) {
    if (T <= 0.0 || t <= 0.0) return 0.0;
    const double beta = p.beta;
    const double q3 = 3.0 - beta;
    const double cT = std::pow(T + t, q3) - std::pow(T, q3);
    const double smooth = integrate(
        [&](double u) {
            return std::exp(-kap * (T - u)) * (std::pow(T + t - u, q3) - cT);
        },
        0.0, T, {1e-10, 1e-14, 48});
    // the -(T-u)^{3-beta} piece, swapped to w = T-u and made smooth
    const double cusp = integrate_power_right_of(
        [&](double w) { return std::exp(-kap * w) * w; }, 0.0, T, q3 - 1.0,
        {1e-11, 1e-300, 48});
    const double pref = std::pow(p.theta, 1.0 - beta) / (p.d * (beta - 2.0) * q3);
    return pref * (smooth - cusp);
}

}  // namespace detail

// Replication-major path export.
inline void write_fou_csv(const FouEnsemble& ens, const TimeGrid& grid,
                          const std::string& path) {
    CsvWriter w(path, {"rep", "t", "value"});
    for (std::size_t r = 0; r < ens.Z.size(); ++r)
        for (std::size_t k = 0; k < grid.size(); ++k)
            w.write_row(static_cast<long>(r), {grid.time(k), ens.Z[r][k]});
}

inline LongrunDiag longrun_diag(double T, double t, const FouConstants& c,
                                const ModelParams& p, const Policy& g) {
    detail::require_ba(p, "longrun_diag");
    if (T < 0.0 || t < 0.0) throw std::domain_error("longrun_diag: negative time");
    LongrunDiag d;
    d.zbar_var_T = detail::zbar_variance_ba(T, p, c.kappa);
    d.zbar_var_limit = c.sigma0sq;
    d.zbar_gap = std::fabs(d.zbar_var_T - d.zbar_var_limit);

    d.rbar_inc_T = detail::covRbar_ba(T + t, T + t, p) + detail::covRbar_ba(T, T, p) -
                   2.0 * detail::covRbar_ba(T, T + t, p);
    d.rbar_inc_limit = c.sigma * c.sigma * std::pow(t, 4.0 - p.beta);
    d.rbar_gap = std::fabs(d.rbar_inc_T - d.rbar_inc_limit);

    d.cross_T = detail::cross_zbar_rbar_ba(T, t, p, c.kappa);
    d.cross_limit = c.sigma * cross_cov_BH_Z0(t, c, p, g);
    d.cross_gap = std::fabs(d.cross_T - d.cross_limit);
    return d;
}

}  // namespace simlab
