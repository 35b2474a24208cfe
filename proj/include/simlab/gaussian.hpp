#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "simlab/fluid.hpp"
#include "simlab/grid.hpp"
#include "simlab/linalg.hpp"
#include "simlab/model.hpp"
#include "simlab/quadrature.hpp"
#include "simlab/rng.hpp"

namespace simlab {

/*
 * Station-level covariance of the driving Gaussian noise R_i. One-dimensional
 * reduced form: with s' = min(s,t), t' = max(s,t),
 *
 *   cov = theta^{1-beta} Int_0^{s'} fU(z) [ (2/(3-beta))(s'-z)^{3-beta}
 *         + ((s'-z)/(beta-2)) ((s'-z)^{2-beta} - (t'-z)^{2-beta}) ] dz.
 *
 * When b = a the intensity along the fluid path is identically 1 and the
 * integral is elementary; otherwise the two pieces are integrated separately,
 * the (s'-z)^{3-beta} piece with an exact power-substitution at z = s'.
 */
inline double cov_R(double s, double t, const FluidSolution& fluid) {
    if (s < 0.0 || t < 0.0) throw std::domain_error("cov_R: negative time");
    const double beta = fluid.params.beta;
    const double pref = std::pow(fluid.params.theta, 1.0 - beta);
    const double sp = std::min(s, t), tp = std::max(s, t);
    if (sp == 0.0) return 0.0;

    if (fluid.exact_ba) {
        // fU == 1: both integrals in closed form
        const double q3 = 3.0 - beta, q4 = 4.0 - beta;
        const double A = (2.0 / q3) * std::pow(sp, q4) / q4;
        const double B = std::pow(sp, q4) / ((beta - 2.0) * q4);
        double C;
        if (tp == sp) {
            C = -B;
        } else {
            const double w0 = tp - sp;
            C = -((sp - tp) * (std::pow(tp, q3) - std::pow(w0, q3)) / q3 +
                  (std::pow(tp, q4) - std::pow(w0, q4)) / q4) /
                (beta - 2.0);
        }
        return pref * (A + B + C);
    }

    const double q3 = 3.0 - beta;
    // combined (s'-z)^{3-beta} coefficient; on the diagonal the cross piece
    // cancels into it exactly
    const double singular = integrate_power_left_of(
        [&](double z) { return fluid.fU_at(z); }, 0.0, sp, q3, {1e-10, 1e-14, 48});
    // on the diagonal the cross piece equals the singular one and the
    // combination collapses to (2/(3-beta)) times it
    const double cross =
        (tp > sp) ? integrate(
                        [&](double z) {
                            return fluid.fU_at(z) * (sp - z) * std::pow(tp - z, 2.0 - beta);
                        },
                        0.0, sp, {1e-10, 1e-14, 48})
                  : singular;
    const double c_sing = 2.0 / q3 + 1.0 / (beta - 2.0);
    return pref * (c_sing * singular - cross / (beta - 2.0));
}

// Brute-force cross-check of the same covariance from its two-layer integral
// representation: the session-size integral is evaluated numerically (split at
// the two kink radii, analytic tail), the time integral adaptively. Slow by
// design; used to validate cov_R, never in production paths.
inline double cov_R_bruteforce(double s, double t, const FluidSolution& fluid) {
    if (s < 0.0 || t < 0.0) throw std::domain_error("cov_R_bruteforce: negative time");
    const double beta = fluid.params.beta;
    const double pref = (beta - 1.0) * std::pow(fluid.params.theta, 1.0 - beta);
    const double sp = std::min(s, t), tp = std::max(s, t);
    if (sp == 0.0) return 0.0;
    auto inner = [&](double z) {
        const double x = sp - z, y = tp - z;  // 0 <= x <= y
        auto kern = [&](double r) {
            return std::min(r, x) * std::min(r, y) * std::pow(r, -beta);
        };
        double v = 0.0;
        if (x > 0.0) v += integrate(kern, 0.0, x, {1e-11, 1e-16, 48});
        if (y > x) v += integrate(kern, x, y, {1e-11, 1e-16, 48});
        v += x * y * std::pow(y, 1.0 - beta) / (beta - 1.0);  // exact tail over [y, inf)
        return fluid.fU_at(z) * v;
    };
    return pref * integrate(inner, 0.0, sp, {1e-9, 1e-14, 48});
}

// Covariance density of the averaged noise: rho(u,v) =
// (theta^{1-beta}/d) Int_0^{u^v} fU(z) ((u v v) - z)^{1-beta} dz. Diverges on
// the diagonal, so equal arguments are rejected.
inline double rho_kernel(double u, double v, const FluidSolution& fluid) {
    if (u < 0.0 || v < 0.0) throw std::domain_error("rho_kernel: negative time");
    if (u == v) throw std::domain_error("rho_kernel: arguments must differ");
    const double beta = fluid.params.beta;
    const double lo = std::min(u, v), hi = std::max(u, v);
    if (lo == 0.0) return 0.0;
    const double pref = std::pow(fluid.params.theta, 1.0 - beta) / fluid.params.d;
    return pref * integrate(
                      [&](double z) { return fluid.fU_at(z) * std::pow(hi - z, 1.0 - beta); },
                      0.0, lo, {1e-10, 1e-14, 48});
}

/*
 * Integrating factor of the linear feedback equation and its antiderivative:
 *   phi(t)  = exp{ -a Int_0^t f_y(z, U(z)) dz }   (nondecreasing, phi(0)=1)
 *   Phi(t)  = Int_0^t phi(z) dz.
 * Tabulated on the fluid grid by composite Simpson with midpoint values from
 * the dense fluid evaluators; dense output by cubic Hermite (the derivatives
 * at the nodes are known exactly).
 */
struct IntegratingFactor {
    const FluidSolution* fs = nullptr;
    std::vector<double> I;    // Int_0^{t_k} fyU
    std::vector<double> Phi;  // Int_0^{t_k} phi

    explicit IntegratingFactor(const FluidSolution& fluid) : fs(&fluid) {
        const std::size_t n = fluid.grid.size();
        const double h = fluid.grid.step();
        I.resize(n);
        Phi.resize(n);
        I[0] = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double tm = fluid.grid.time(k) + 0.5 * h;
            I[k + 1] = I[k] + (h / 6.0) * (fluid.fyU[k] + 4.0 * fluid.fyU_at(tm) +
                                           fluid.fyU[k + 1]);
        }
        Phi[0] = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double tm = fluid.grid.time(k) + 0.5 * h;
            Phi[k + 1] = Phi[k] + (h / 6.0) * (phi_from(I[k]) + 4.0 * phi_at(tm) +
                                               phi_from(I[k + 1]));
        }
    }

    double phi_from(double integral) const { return std::exp(-fs->params.a() * integral); }

    double I_at(double t) const {
        // Hermite on I with derivative fyU
        const auto& g = fs->grid;
        if (t <= 0.0) return 0.0;
        if (t >= g.horizon) return I.back() + fs->fyU.back() * (t - g.horizon);
        const double h = g.step();
        const auto k = std::min(static_cast<std::size_t>(t / h), g.size() - 2);
        const double x = (t - g.time(k)) / h;
        const double y0 = I[k], y1 = I[k + 1];
        const double m0 = fs->fyU[k] * h, m1 = fs->fyU[k + 1] * h;
        const double x2 = x * x, x3 = x2 * x;
        return (2 * x3 - 3 * x2 + 1) * y0 + (x3 - 2 * x2 + x) * m0 +
               (-2 * x3 + 3 * x2) * y1 + (x3 - x2) * m1;
    }

    double phi_at(double t) const { return phi_from(I_at(t)); }
    double phitilde_at(double t) const { return std::exp(fs->params.a() * I_at(t)); }

    double Phi_at(double t) const {
        const auto& g = fs->grid;
        if (t <= 0.0) return 0.0;
        if (t >= g.horizon) return Phi.back() + phi_at(g.horizon) * (t - g.horizon);
        const double h = g.step();
        const auto k = std::min(static_cast<std::size_t>(t / h), g.size() - 2);
        const double x = (t - g.time(k)) / h;
        const double y0 = Phi[k], y1 = Phi[k + 1];
        const double m0 = phi_from(I[k]) * h, m1 = phi_from(I[k + 1]) * h;
        const double x2 = x * x, x3 = x2 * x;
        return (2 * x3 - 3 * x2 + 1) * y0 + (x3 - 2 * x2 + x) * m0 +
               (-2 * x3 + 3 * x2) * y1 + (x3 - x2) * m1;
    }
};

namespace detail {

// W(v_k) = Int_0^{v_k} fU(z) (Phi(v_k) - Phi(z)) (v_k - z)^{1-beta} dz for
// every node of the uniform grid {j hz}, by product integration: the smooth
// factor is interpolated linearly per interval and the kernel moments are
// exact. The final (singular) interval uses the exact linear coefficient
// fU(v)phi(v) of the vanishing factor plus a fitted quadratic correction.
// One O(N^2) pass.
inline std::vector<double> singular_profile(const std::vector<double>& fU,
                                            const std::vector<double>& Phi,
                                            const std::vector<double>& phi, double hz,
                                            double beta) {
    const std::size_t n = fU.size();
    std::vector<double> W(n, 0.0);
    if (n < 2) return W;
    const double q2 = 2.0 - beta;  // in (-1, 0)
    const double q3 = 3.0 - beta;
    const double q4 = 4.0 - beta;
    std::vector<double> pw2(n), pw3(n);  // (m hz)^{2-beta}, (m hz)^{3-beta}
    pw2[0] = 0.0;
    pw3[0] = 0.0;
    for (std::size_t m = 1; m < n; ++m) {
        const double w = m * hz;
        pw2[m] = std::pow(w, q2);
        pw3[m] = std::pow(w, q3);
    }
    const double h3 = std::pow(hz, q3), h4 = std::pow(hz, q4);
    for (std::size_t k = 1; k < n; ++k) {
        double acc = 0.0;
        // interior intervals [z_j, z_{j+1}], j = 0..k-2, distance m = k - j >= 2
        for (std::size_t j = 0; j + 1 < k; ++j) {
            const std::size_t m = k - j;
            const double P0 = fU[j] * (Phi[k] - Phi[j]);
            const double P1 = fU[j + 1] * (Phi[k] - Phi[j + 1]);
            const double I0 = (pw2[m] - pw2[m - 1]) / q2;          // Int w^{1-beta}
            const double I1 = (pw3[m] - pw3[m - 1]) / q3;          // Int w^{2-beta}
            const double A = m * hz;
            // P as a function of w = v - z: P(w) = P1 + (P0 - P1)(w - B)/hz
            acc += P1 * I0 + (P0 - P1) * (I1 - (A - hz) * I0) / hz;
        }
        // last interval: P(w) ~ c1 w + c2 w^2 with c1 = fU(v) phi(v) exact
        const double c1 = fU[k] * phi[k];
        const double Ph = fU[k - 1] * (Phi[k] - Phi[k - 1]);  // P at w = hz
        const double c2 = (Ph - c1 * hz) / (hz * hz);
        acc += c1 * h3 / q3 + c2 * h4 / q4;
        W[k] = acc;
    }
    return W;
}

// Int_0^S fU(z) (Phi(S) - Phi(z)) (v - z)^{1-beta} dz for v > S: same linear
// product integration, no singular interval.
inline double cross_profile(const std::vector<double>& fU, const std::vector<double>& Phi,
                            double hz, double beta, double v) {
    const std::size_t n = fU.size();
    const double q2 = 2.0 - beta, q3 = 3.0 - beta;
    const double PhiS = Phi.back();
    double acc = 0.0;
    double pwA2 = std::pow(v, q2), pwA3 = std::pow(v, q3);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double A = v - j * hz;
        const double B = A - hz;
        const double pwB2 = std::pow(B, q2), pwB3 = std::pow(B, q3);
        const double I0 = (pwB2 - pwA2) / q2 * -1.0;  // Int_B^A w^{1-beta} dw
        const double I1 = (pwB3 - pwA3) / q3 * -1.0;
        const double P0 = fU[j] * (PhiS - Phi[j]);
        const double P1 = fU[j + 1] * (PhiS - Phi[j + 1]);
        acc += P1 * I0 + (P0 - P1) * (I1 - B * I0) / hz;
        pwA2 = pwB2;
        pwA3 = pwB3;
    }
    return acc;
}

struct ZbarCovParts {
    double diag_s = 0.0;   // Int_0^s phi(v) W(v) dv
    double cross = 0.0;    // Int_s^t phi(v) Wx(v; s) dv
};

inline ZbarCovParts cov_Zbar_parts(double s, double t, const FluidSolution& fluid,
                                   const IntegratingFactor& fac, std::size_t n1,
                                   std::size_t n2) {
    const double beta = fluid.params.beta;
    const double hz = s / static_cast<double>(n1);
    std::vector<double> fU(n1 + 1), Phi(n1 + 1), phi(n1 + 1);
    for (std::size_t j = 0; j <= n1; ++j) {
        const double z = j * hz;
        fU[j] = fluid.fU_at(z);
        Phi[j] = fac.Phi_at(z);
        phi[j] = fac.phi_at(z);
    }
    ZbarCovParts parts;
    const std::vector<double> W = singular_profile(fU, Phi, phi, hz, beta);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 <= n1; ++k)
        acc += 0.5 * hz * (phi[k] * W[k] + phi[k + 1] * W[k + 1]);
    parts.diag_s = acc;

    if (t > s) {
        // v-integral over [s, t] after v = s + w^2, which flattens the
        // (v-s)^{3-beta} cusp at v = s; composite Simpson in w
        const double wmax = std::sqrt(t - s);
        const double hw = wmax / static_cast<double>(n2);
        auto F = [&](double w) {
            const double v = s + w * w;
            if (w == 0.0) return 0.0;
            return 2.0 * w * fac.phi_at(v) * cross_profile(fU, Phi, hz, beta, v);
        };
        double simp = 0.0;
        for (std::size_t i = 0; i < n2; ++i) {
            const double w0 = i * hw, w1 = w0 + hw;
            simp += (hw / 6.0) * (F(w0) + 4.0 * F(0.5 * (w0 + w1)) + F(w1));
        }
        parts.cross = simp;
    }
    return parts;
}

}  // namespace detail

/*
 * Covariance of the limit average fluctuation:
 *   cov(Zb(s), Zb(t)) = phitilde(s) phitilde(t) (theta^{1-beta}/d)
 *       [ 2 Int_0^s phi(v) W(v) dv + Int_s^t phi(v) Wx(v; s) dv ],  s <= t,
 * where W and Wx collapse the double integral of phi phi rho by exchanging
 * the order of integration. Product integration plus one Richardson step at
 * the scheme's O(h^{4-beta}) rate.
 */
inline double cov_Zbar(double s, double t, const FluidSolution& fluid,
                       const IntegratingFactor& fac, std::size_t n1 = 4096,
                       std::size_t n2 = 256) {
    if (s < 0.0 || t < 0.0) throw std::domain_error("cov_Zbar: negative time");
    const double sp = std::min(s, t), tp = std::max(s, t);
    if (sp == 0.0) return 0.0;
    const double beta = fluid.params.beta;
    auto full = [&](std::size_t m1, std::size_t m2) {
        const auto parts = detail::cov_Zbar_parts(sp, tp, fluid, fac, m1, m2);
        return 2.0 * parts.diag_s + parts.cross;
    };
    const double coarse = full(n1 / 2, n2 / 2);
    const double fine = full(n1, n2);
    const double p = std::pow(2.0, 4.0 - beta) - 1.0;
    const double value = fine + (fine - coarse) / p;
    const double pref = std::pow(fluid.params.theta, 1.0 - beta) / fluid.params.d;
    return pref * fac.phitilde_at(sp) * fac.phitilde_at(tp) * value;
}

// Diagonal cov_Zbar(t,t) at every node of a uniform N-grid on [0, T] in one
// O(N^2) pass; used by the time-uniform bound checks and growth-exponent fits.
inline std::vector<double> cov_Zbar_diag_profile(const FluidSolution& fluid,
                                                 const IntegratingFactor& fac, double T,
                                                 std::size_t N) {
    const double beta = fluid.params.beta;
    const double hz = T / static_cast<double>(N);
    std::vector<double> fU(N + 1), Phi(N + 1), phi(N + 1);
    for (std::size_t j = 0; j <= N; ++j) {
        const double z = j * hz;
        fU[j] = fluid.fU_at(z);
        Phi[j] = fac.Phi_at(z);
        phi[j] = fac.phi_at(z);
    }
    const std::vector<double> W = detail::singular_profile(fU, Phi, phi, hz, beta);
    const double pref = 2.0 * std::pow(fluid.params.theta, 1.0 - beta) / fluid.params.d;
    std::vector<double> out(N + 1, 0.0);
    double acc = 0.0;
    for (std::size_t k = 1; k <= N; ++k) {
        acc += 0.5 * hz * (phi[k - 1] * W[k - 1] + phi[k] * W[k]);
        const double pt = fac.phitilde_at(k * hz);
        out[k] = pref * pt * pt * acc;
    }
    return out;
}

struct MomentBound {
    double bound = 0.0;
    double mu = 0.0;
};

// Time-uniform second-moment bound of the limit fluctuation:
// 2 theta^{1-beta} Gamma(4-beta) / (d (beta-2)(3-beta) (a mu)^{4-beta}).
inline MomentBound moment_bound(const ModelParams& p, const FluidSolution& fluid) {
    MomentBound mb;
    mb.mu = fluid.mu;
    const double beta = p.beta;
    mb.bound = 2.0 * std::pow(p.theta, 1.0 - beta) * std::tgamma(4.0 - beta) /
               (p.d * (beta - 2.0) * (3.0 - beta) *
                std::pow(p.a() * mb.mu, 4.0 - beta));
    return mb;
}

/*
 * Precomputed sampling kit: covariance grids of the station noise and its
 * average, the integrating factor on the grid, the Cholesky factor used by
 * the samplers, and the moment bound.
 */
struct GaussianLimitKit {
    ModelParams params;
    Policy policy = Policy::zero();
    FluidSolution fluid;
    IntegratingFactor factor;
    TimeGrid grid{1.0, 1};
    Matrix covR, covRbar;
    std::vector<double> phi, phitilde;
    CholeskyResult cholRbar;
    double mu = 0.0;
    double momentBound = 0.0;

    GaussianLimitKit(const ModelParams& p, const Policy& g, FluidSolution fl, double horizon,
                     std::size_t steps)
        : params(p), policy(g), fluid(std::move(fl)), factor(fluid), grid(horizon, steps) {
        if (horizon > fluid.grid.horizon + 1e-12)
            throw std::domain_error("GaussianLimitKit: horizon exceeds fluid horizon");
        const std::size_t G = grid.size();
        covR = Matrix(G);
        for (std::size_t i = 0; i < G; ++i)
            for (std::size_t j = i; j < G; ++j) {
                const double v = cov_R(grid.time(i), grid.time(j), fluid);
                covR(i, j) = v;
                covR(j, i) = v;
            }
        covRbar = covR;
        for (double& x : covRbar.a) x /= params.d;
        phi.resize(G);
        phitilde.resize(G);
        for (std::size_t i = 0; i < G; ++i) {
            phi[i] = factor.phi_at(grid.time(i));
            phitilde[i] = 1.0 / phi[i];
        }
        cholRbar = cholesky_jitter(covRbar);
        const MomentBound mb = moment_bound(params, fluid);
        mu = mb.mu;
        momentBound = mb.bound;
    }
};

// M mean-zero Gaussian paths of the averaged noise on the kit grid;
// replication r consumes the dedicated stream replication_seed(seed, r).
inline std::vector<std::vector<double>> sample_Rbar(const GaussianLimitKit& kit,
                                                    std::size_t M, std::uint64_t seed) {
    const std::size_t G = kit.grid.size();
    std::vector<std::vector<double>> out(M);
    std::vector<double> z(G);
    for (std::size_t r = 0; r < M; ++r) {
        Rng rng(replication_seed(seed, r));
        for (std::size_t i = 0; i < G; ++i) z[i] = rng.normal();
        out[r] = lower_times(kit.cholRbar.L, z);
    }
    return out;
}

// Discrete Young solution of the limit feedback equation driven by one
// averaged-noise path: Zb(t_k) = phitilde(t_k) Sum_{j<k} phi(t_j) dRb_j,
// evaluated by the equivalent stable rolling recursion.
inline std::vector<double> solve_limit_Zbar(const std::vector<double>& rbar,
                                            const GaussianLimitKit& kit) {
    const std::size_t G = kit.grid.size();
    if (rbar.size() != G)
        throw std::invalid_argument("solve_limit_Zbar: path length does not match kit grid");
    std::vector<double> z(G, 0.0);
    for (std::size_t k = 0; k + 1 < G; ++k)
        z[k + 1] = (kit.phi[k] / kit.phi[k + 1]) * (z[k] + rbar[k + 1] - rbar[k]);
    return z;
}

// Exact variance of the discrete Young sum at grid node k, straight from the
// covariance matrix; quantifies the grid-resolution bias of the sampler
// without any Monte Carlo noise.
inline double discrete_Zbar_variance(const GaussianLimitKit& kit, std::size_t k) {
    if (k >= kit.grid.size()) throw std::domain_error("discrete_Zbar_variance: node index");
    if (k == 0) return 0.0;
    // weights of R(t_j) in Sum_{j<k} phi_j (R_{j+1} - R_j)
    std::vector<double> w(k + 1, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        w[j + 1] += kit.phi[j];
        w[j] -= kit.phi[j];
    }
    double var = 0.0;
    for (std::size_t i = 0; i <= k; ++i)
        for (std::size_t j = 0; j <= k; ++j)
            var += w[i] * w[j] * kit.covRbar(i, j);
    const double pt = kit.phitilde[k];
    return pt * pt * var;
}

struct LimitZEnsemble {
    // [replication][station][grid node] and the matching averaged solution
    std::vector<std::vector<std::vector<double>>> Z;
    std::vector<std::vector<double>> Zbar;
};

/*
 * Joint sampler of the d-vector limit process: stations share the feedback
 * integral through the average, so Z_i = R_i + (Zb - Rb) with Zb the Young
 * solution driven by Rb. The average of the components then equals Zb
 * identically, and d = 1 reduces to solve_limit_Zbar.
 */
inline LimitZEnsemble sample_limit_Z(const GaussianLimitKit& kit, std::size_t M,
                                     std::uint64_t seed) {
    const std::size_t G = kit.grid.size();
    const int d = kit.params.d;
    const double sd = std::sqrt(static_cast<double>(d));  // covR = d covRbar
    LimitZEnsemble ens;
    ens.Z.resize(M);
    ens.Zbar.resize(M);
    std::vector<double> z(G);
    for (std::size_t r = 0; r < M; ++r) {
        Rng rng(replication_seed(seed, r));
        std::vector<std::vector<double>> R(d);
        for (int i = 0; i < d; ++i) {
            for (std::size_t k = 0; k < G; ++k) z[k] = rng.normal();
            R[i] = lower_times(kit.cholRbar.L, z);
            for (double& x : R[i]) x *= sd;
        }
        std::vector<double> rbar(G, 0.0);
        for (int i = 0; i < d; ++i)
            for (std::size_t k = 0; k < G; ++k) rbar[k] += R[i][k] / d;
        const std::vector<double> zbar = solve_limit_Zbar(rbar, kit);
        ens.Z[r].resize(d);
        for (int i = 0; i < d; ++i) {
            ens.Z[r][i].resize(G);
            for (std::size_t k = 0; k < G; ++k)
                ens.Z[r][i][k] = R[i][k] + (zbar[k] - rbar[k]);
        }
        ens.Zbar[r] = zbar;
    }
    return ens;
}

}  // namespace simlab
