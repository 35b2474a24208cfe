#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "simlab/csv.hpp"
#include "simlab/grid.hpp"
#include "simlab/model.hpp"
#include "simlab/rootfind.hpp"

namespace simlab {

// Deterministic limit objects on a uniform grid: the fluid workload U, its
// offset u = U - bt, the time change (Lambda, gamma) and the bias term V.
// Solvers work in the offset variable throughout; U - bt formed from U would
// cancel catastrophically at large t.
struct FluidSolution {
    ModelParams params;
    Policy policy = Policy::zero();
    TimeGrid grid;
    double K = 0.0;  // root of g(K) = log(a/b); long-run value of u

    std::vector<double> u;       // offset on grid
    std::vector<double> U;       // u + b t
    std::vector<double> fU;      // f(t, U(t)) = exp{-g(u)}
    std::vector<double> fyU;     // f_y(t, U(t)) = -fU * g'(u)
    std::vector<double> Lambda;  // cumulative intensity
    std::vector<double> gamma;   // inverse time change at grid times
    std::vector<double> V;       // bias term

    double mu = 0.0;  // min over grid of -f_y(t, U(t))
    double K1 = 0.0;  // max over grid of f(t, U(t))
    bool exact_ba = false;

    double du_at_node(std::size_t k) const {
        return params.a() * fU[k] - params.b;
    }

    // dense offset via cubic Hermite (nodes + ODE slopes); exact for b = a
    double offset_at(double t) const {
        if (exact_ba) return 0.0;
        const double h = grid.step();
        if (t <= 0.0) return 0.0;
        if (t >= grid.horizon) return u.back();
        const auto k = std::min(static_cast<std::size_t>(t / h), grid.size() - 2);
        const double s = (t - grid.time(k)) / h;
        const double u0 = u[k], u1 = u[k + 1];
        const double m0 = h * du_at_node(k), m1 = h * du_at_node(k + 1);
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * u0 + (s3 - 2 * s2 + s) * m0
             + (-2 * s3 + 3 * s2) * u1 + (s3 - s2) * m1;
    }

    double U_at(double t) const { return offset_at(t) + params.b * t; }
    double fU_at(double t) const { return std::exp(-policy.g(offset_at(t))); }
    double fyU_at(double t) const {
        const double x = offset_at(t);
        return -std::exp(-policy.g(x)) * policy.gp(x);
    }

    // cumulative intensity, dense via Hermite with Lambda' = fU
    double lambda_at(double t) const {
        if (exact_ba) return t;
        const double h = grid.step();
        if (t <= 0.0) return 0.0;
        if (t >= grid.horizon)
            return Lambda.back() + fU.back() * (t - grid.horizon);
        const auto k = std::min(static_cast<std::size_t>(t / h), grid.size() - 2);
        const double s = (t - grid.time(k)) / h;
        const double l0 = Lambda[k], l1 = Lambda[k + 1];
        const double m0 = h * fU[k], m1 = h * fU[k + 1];
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * l0 + (s3 - 2 * s2 + s) * m0
             + (-2 * s3 + 3 * s2) * l1 + (s3 - s2) * m1;
    }

    // inverse time change; linear continuation with slope 1/fU(T) past the grid
    double gamma_at(double s) const {
        if (exact_ba) return s;
        if (s <= 0.0) return 0.0;
        if (s >= Lambda.back()) return grid.horizon + (s - Lambda.back()) / fU.back();
        const auto it = std::upper_bound(Lambda.begin(), Lambda.end(), s);
        const auto k = static_cast<std::size_t>(it - Lambda.begin()) - 1;
        return bisect([&](double t) { return lambda_at(t) - s; },
                      grid.time(k), grid.time(k + 1), 1e-12, 1e-12);
    }

    double V_at(double t) const {
        const double h = grid.step();
        if (t <= 0.0) return 0.0;
        if (t >= grid.horizon) return V.back();
        const auto k = std::min(static_cast<std::size_t>(t / h), grid.size() - 2);
        const double s = (t - grid.time(k)) / h;
        return (1.0 - s) * V[k] + s * V[k + 1];
    }
};

// Unique root of g(K) = log(a/b); bisection on a bracket expanded from [-1,1].
inline double offset_root(const ModelParams& p, const Policy& g) {
    const double target = std::log(p.a() / p.b);
    if (target == 0.0) return 0.0;
    if (g.is_zero())
        throw validation_error("offset_root: zero policy admits no offset root unless b = a");
    double lo = -1.0, hi = 1.0;
    auto fn = [&](double x) { return g.g(x) - target; };
    expand_bracket(fn, lo, hi);
    return bisect(fn, lo, hi, 1e-13, 1e-13);
}

// RK4 on the offset ODE u' = a exp{-g(u)} - b, u(0) = 0. The b = a branch is
// exact: u == 0, U = bt, fU == 1.
inline FluidSolution solve_fluid(const ModelParams& p, const Policy& g, double horizon,
                                 std::size_t steps = 4096) {
    FluidSolution fs;
    fs.params = p;
    fs.policy = g;
    fs.grid = TimeGrid(horizon, steps);
    fs.K = g.is_zero() ? 0.0 : offset_root(p, g);

    const std::size_t N = fs.grid.size();
    fs.u.assign(N, 0.0);
    const double a = p.a();
    fs.exact_ba = (p.b == a);

    if (!fs.exact_ba) {
        const double h = fs.grid.step();
        auto rhs = [&](double x) { return a * std::exp(-g.g(x)) - p.b; };
        for (std::size_t k = 0; k + 1 < N; ++k) {
            const double x = fs.u[k];
            const double k1 = rhs(x);
            const double k2 = rhs(x + 0.5 * h * k1);
            const double k3 = rhs(x + 0.5 * h * k2);
            const double k4 = rhs(x + h * k3);
            fs.u[k + 1] = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }

    fs.U.resize(N);
    fs.fU.resize(N);
    fs.fyU.resize(N);
    for (std::size_t k = 0; k < N; ++k) {
        fs.U[k] = fs.u[k] + p.b * fs.grid.time(k);
        fs.fU[k] = fs.exact_ba ? 1.0 : std::exp(-g.g(fs.u[k]));
        fs.fyU[k] = -fs.fU[k] * g.gp(fs.u[k]);
    }
    fs.K1 = *std::max_element(fs.fU.begin(), fs.fU.end());
    fs.mu = fs.fU[0] * g.gp(fs.u[0]);
    for (std::size_t k = 0; k < N; ++k) fs.mu = std::min(fs.mu, -fs.fyU[k]);
    return fs;
}

// Lambda by composite Simpson on fU (midpoints from the dense offset), gamma
// by bracketed bisection per grid node. For b = a both are the identity.
inline void time_change(FluidSolution& fs) {
    const std::size_t N = fs.grid.size();
    fs.Lambda.assign(N, 0.0);
    fs.gamma.assign(N, 0.0);
    if (fs.exact_ba) {
        for (std::size_t k = 0; k < N; ++k) {
            fs.Lambda[k] = fs.grid.time(k);
            fs.gamma[k] = fs.grid.time(k);
        }
        return;
    }
    const double h = fs.grid.step();
    for (std::size_t k = 0; k + 1 < N; ++k) {
        const double fmid = fs.fU_at(fs.grid.time(k) + 0.5 * h);
        fs.Lambda[k + 1] = fs.Lambda[k] + h / 6.0 * (fs.fU[k] + 4.0 * fmid + fs.fU[k + 1]);
    }
    for (std::size_t k = 0; k < N; ++k) fs.gamma[k] = fs.gamma_at(fs.grid.time(k));
}

// Product-integration solver for the weakly singular Volterra equation
//   V(t) = a \int_0^t f_y(s,U(s)) V(s) ds - a theta^{2-b} \int_0^t f(s,U(s)) (t-s)^{2-b} ds.
// The kernel (t-s)^{2-beta} is integrated exactly against the piecewise-linear
// interpolant of f(s,U(s)); the regular Volterra term uses the trapezoid rule
// (exact for piecewise-linear V), implicit in the current node value. The
// measured global order is 4-beta: the kernel moments are exact, so the error
// is set by interpolating V ~ t^{3-beta} near the origin.
inline void solve_V(const ModelParams& p, FluidSolution& fs) {
    const std::size_t N = fs.grid.size();
    const double h = fs.grid.step();
    const double a = p.a();
    const double q = 3.0 - p.beta;          // in (0,1)
    const double pw_sing = 2.0 - p.beta;    // kernel exponent, in (-1,0)
    fs.V.assign(N, 0.0);

    // kernel moments against the linear hat on a source interval at lag m:
    //   I0[m] = int_{(m-1)h}^{mh} w^{2-beta} dw
    //   I1[m] = int (A - w) w^{2-beta} dw / h with A = mh  (weight of the
    //           right-endpoint slope term)
    std::vector<double> powq(N + 1), powq1(N + 1);
    for (std::size_t m = 0; m <= N; ++m) {
        const double w = static_cast<double>(m) * h;
        powq[m] = std::pow(w, q);
        powq1[m] = std::pow(w, q + 1.0);
    }
    std::vector<double> I0(N), I1(N);
    for (std::size_t m = 1; m < N; ++m) {
        const double A = static_cast<double>(m) * h;
        I0[m] = (powq[m] - powq[m - 1]) / q;
        I1[m] = A * I0[m] - (powq1[m] - powq1[m - 1]) / (q + 1.0);
    }

    const double cf = -a * std::pow(p.theta, pw_sing);
    double volterra_sum = 0.0;  // running sum of fyU[j] * V[j], j = 1..k-1
    for (std::size_t k = 1; k < N; ++k) {
        double F = 0.0;
        for (std::size_t m = 1; m <= k; ++m) {
            const std::size_t j = k - m;
            F += fs.fU[j] * I0[m] + (fs.fU[j + 1] - fs.fU[j]) * I1[m] / h;
        }
        const double forcing = cf * F;
        const double S = h * (0.5 * fs.fyU[0] * fs.V[0] + volterra_sum);
        fs.V[k] = (a * S + forcing) / (1.0 - a * (h / 2.0) * fs.fyU[k]);
        volterra_sum += fs.fyU[k] * fs.V[k];
    }
}

// full pipeline: ODE, time change, bias term
inline FluidSolution make_fluid(const ModelParams& p, const Policy& g, double horizon,
                                std::size_t steps = 4096) {
    FluidSolution fs = solve_fluid(p, g, horizon, steps);
    time_change(fs);
    solve_V(p, fs);
    return fs;
}

inline void write_fluid_csv(const FluidSolution& fs, const std::string& path) {
    CsvWriter w(path, {"t", "U", "u", "Lambda", "gamma", "V", "fU", "fyU"});
    for (std::size_t k = 0; k < fs.grid.size(); ++k)
        w.write_row({fs.grid.time(k), fs.U[k], fs.u[k], fs.Lambda[k], fs.gamma[k],
                     fs.V[k], fs.fU[k], fs.fyU[k]});
}

}  // namespace simlab
