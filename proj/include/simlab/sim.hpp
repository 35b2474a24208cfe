#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "simlab/csv.hpp"
#include "simlab/fluid.hpp"
#include "simlab/grid.hpp"
#include "simlab/model.hpp"
#include "simlab/quadrature.hpp"
#include "simlab/rng.hpp"
#include "simlab/rootfind.hpp"

namespace simlab {

struct SessionEvent {
    int station = 1;     // 1..d
    double start = 0.0;  // system clock
    double duration = 0.0;
};

// One realization of the scaled d-station system. Workloads are piecewise
// linear between breakpoints with slope (active sessions)/n^{alpha-1}; the
// stored sequences are breakpoint-indexed and exact (no time discretization).
struct SamplePath {
    ModelParams params;
    Policy policy = Policy::zero();
    std::uint64_t seed = 0;
    double horizon = 0.0;

    std::vector<SessionEvent> events;     // ordered by start
    std::vector<double> breakpoints;      // sorted; front() = 0, back() = horizon
    std::vector<std::vector<double>> Y;   // [station][breakpoint] workload
    std::vector<std::vector<int>> active; // [station][breakpoint] count on [bp_k, bp_{k+1})
    std::vector<std::vector<long>> N;     // [station][breakpoint] arrivals through bp_k

    double slope_unit() const {
        return std::pow(static_cast<double>(params.n), -(params.alpha - 1.0));
    }
};

struct PathValue {
    double Ybar = 0.0;
    std::vector<double> Y;
    std::vector<long> N;
};

// Exact inverse CDF of the scaled session law: ((1-u)^{-1/(beta-1)} - 1)/(n theta).
inline double sample_session_length(double u, const ModelParams& p) {
    if (!(u >= 0.0 && u < 1.0)) throw std::domain_error("sample_session_length: u outside [0,1)");
    return (std::pow(1.0 - u, -1.0 / (p.beta - 1.0)) - 1.0) / (static_cast<double>(p.n) * p.theta);
}

// CDF of the same law, used by the KS self-tests.
inline double session_length_cdf(double r, const ModelParams& p) {
    if (r <= 0.0) return 0.0;
    return 1.0 - std::pow(static_cast<double>(p.n) * p.theta * r + 1.0, 1.0 - p.beta);
}

inline PathValue evaluate_path(const SamplePath& path, double t) {
    if (!(t >= 0.0 && t <= path.horizon))
        throw std::domain_error("evaluate_path: t outside [0, horizon]");
    const auto& bp = path.breakpoints;
    auto it = std::upper_bound(bp.begin(), bp.end(), t);
    const auto k = static_cast<std::size_t>(it - bp.begin()) - 1;  // bp[k] <= t
    const int d = path.params.d;
    const double su = path.slope_unit();
    PathValue v;
    v.Y.resize(d);
    v.N.resize(d);
    double sum = 0.0;
    for (int i = 0; i < d; ++i) {
        v.Y[i] = path.Y[i][k] + su * path.active[i][k] * (t - bp[k]);
        v.N[i] = path.N[i][k];
        sum += v.Y[i];
    }
    v.Ybar = sum / d;
    return v;
}

namespace detail {

// Exact integral of f(z, ybar(z)) over [t0, t1] where ybar is linear with the
// given slope and value ybar0 at t0. Closed form for linear g, adaptive
// quadrature for the catalog remainder.
inline double segment_lambda(const ModelParams& p, const Policy& g, double t0, double t1,
                             double ybar0, double slope) {
    if (t1 <= t0) return 0.0;
    const double x0 = ybar0 - p.b * t0;
    const double m = slope - p.b;  // d/dz of the policy argument
    const double dt = t1 - t0;
    switch (g.kind()) {
        case Policy::Kind::zero:
            return dt;
        case Policy::Kind::linear: {
            const double c = g.gp(0.0);
            const double cm = c * m;
            if (cm == 0.0) return std::exp(-c * x0) * dt;
            return std::exp(-c * x0) * (-std::expm1(-cm * dt)) / cm;
        }
        default:
            return integrate([&](double z) { return std::exp(-g.g(x0 + m * (z - t0))); }, t0,
                             t1, {1e-13, 1e-300, 40});
    }
}

// shared mutable state for both construction algorithms
struct SimState {
    SamplePath path;
    std::vector<Rng> arr, dur;  // per-station sub-streams
    std::vector<double> Yi;     // current workloads
    std::vector<int> ki;        // active counts
    std::vector<long> Ni;       // cumulative arrivals
    double t = 0.0;
    double Ybar = 0.0;
    double slope_unit = 0.0;
    // session ends, min-heap on time
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                        std::greater<>> ends;
    long events_budget = 0;

    SimState(const ModelParams& p, const Policy& g, double horizon, std::uint64_t seed,
             long budget) {
        if (!(horizon > 0.0)) throw std::domain_error("simulate: horizon must be positive");
        path.params = p;
        path.policy = g;
        path.seed = seed;
        path.horizon = horizon;
        slope_unit = std::pow(static_cast<double>(p.n), -(p.alpha - 1.0));
        Yi.assign(p.d, 0.0);
        ki.assign(p.d, 0);
        Ni.assign(p.d, 0);
        path.Y.assign(p.d, {});
        path.active.assign(p.d, {});
        path.N.assign(p.d, {});
        for (int i = 0; i < p.d; ++i) {
            arr.emplace_back(substream_seed(seed, 2 * static_cast<std::uint64_t>(i)));
            dur.emplace_back(substream_seed(seed, 2 * static_cast<std::uint64_t>(i) + 1));
        }
        events_budget = budget;
        record_breakpoint();
    }

    void charge(long units) {
        events_budget -= units;
        if (events_budget < 0) throw resource_error("simulate: event budget exceeded");
    }

    double total_slope() const {
        long k = 0;
        for (int c : ki) k += c;
        return slope_unit * static_cast<double>(k) / path.params.d;
    }

    void advance_to(double t2) {
        const double dt = t2 - t;
        if (dt <= 0.0) { t = t2; return; }
        for (std::size_t i = 0; i < Yi.size(); ++i)
            Yi[i] += slope_unit * ki[i] * dt;
        double s = 0.0;
        for (double y : Yi) s += y;
        Ybar = s / path.params.d;
        t = t2;
    }

    void record_breakpoint() {
        // collapse duplicate times (simultaneous end + record requests)
        if (!path.breakpoints.empty() && path.breakpoints.back() == t) {
            for (std::size_t i = 0; i < Yi.size(); ++i) {
                path.Y[i].back() = Yi[i];
                path.active[i].back() = ki[i];
                path.N[i].back() = Ni[i];
            }
            return;
        }
        path.breakpoints.push_back(t);
        for (std::size_t i = 0; i < Yi.size(); ++i) {
            path.Y[i].push_back(Yi[i]);
            path.active[i].push_back(ki[i]);
            path.N[i].push_back(Ni[i]);
        }
    }

    double next_end() const {
        return ends.empty() ? std::numeric_limits<double>::infinity() : ends.top().first;
    }

    // pop every session ending exactly at the current time
    void process_due_ends() {
        bool changed = false;
        while (!ends.empty() && ends.top().first <= t) {
            ki[ends.top().second] -= 1;
            ends.pop();
            changed = true;
        }
        if (changed) record_breakpoint();
    }

    void accept_arrival(int station, double when) {
        const double tau = sample_session_length(dur[station].uniform(), path.params);
        path.events.push_back({station + 1, when, tau});
        ki[station] += 1;
        Ni[station] += 1;
        if (when + tau < path.horizon) ends.emplace(when + tau, station);
        record_breakpoint();
    }

    void finish() {
        advance_to(path.horizon);
        process_due_ends();
        record_breakpoint();
    }

    double segment_lambda(double t0, double t1, double ybar0, double slope) const {
        return detail::segment_lambda(path.params, path.policy, t0, t1, ybar0, slope);
    }
};

}  // namespace detail

/*
 * Ogata-style thinning. Between breakpoints Ybar is linear and nondecreasing
 * and g is increasing, so on a lookahead window [t, t+delta] the per-station
 * arrival intensity n^alpha exp{-g(Ybar(s) - b s)} is dominated by
 * n^alpha exp{-g(Ybar(t) - b (t+delta))}. delta is capped by the next session
 * end, so the slope of Ybar cannot change inside a window. Each station draws
 * candidates from its own arrival stream; the earliest candidate inside the
 * window is accepted with probability f(actual)/bound.
 */
inline SamplePath simulate_scaled_path(const ModelParams& p, const Policy& g, double horizon,
                                       std::uint64_t seed, long event_budget = 100000000L) {
    detail::SimState st(p, g, horizon, seed, event_budget);
    const double n_alpha = std::pow(static_cast<double>(p.n), p.alpha);
    const double inf = std::numeric_limits<double>::infinity();

    while (st.t < horizon) {
        const double f_now = std::exp(-g.g(st.Ybar - p.b * st.t));
        const double lookahead = 1.0 / (n_alpha * f_now);
        const double w_end = std::min({st.t + lookahead, st.next_end(), horizon});
        const double bound = std::exp(-g.g(st.Ybar - p.b * w_end));  // >= f on [t, w_end]
        const double rate = n_alpha * bound;

        double tc = inf;
        int ic = -1;
        for (int i = 0; i < p.d; ++i) {
            const double cand = st.t + st.arr[i].exponential(rate);
            if (cand < tc) { tc = cand; ic = i; }
        }
        st.charge(p.d);

        if (tc >= w_end) {
            st.advance_to(w_end);
            st.process_due_ends();
            continue;
        }
        const double ybar_c = st.Ybar + st.total_slope() * (tc - st.t);
        const double f_c = std::exp(-g.g(ybar_c - p.b * tc));
        const double u = st.arr[ic].uniform();
        st.advance_to(tc);
        if (u <= f_c / bound) st.accept_arrival(ic, tc);
    }
    st.finish();
    return st.path;
}

/*
 * Operational-time construction: station arrivals are a rate-n^alpha Poisson
 * process in s, mapped to clock time through Lambda_n^{-1}. Lambda_n is
 * integrated exactly segment by segment (closed form for linear policies) and
 * inverted inside the owning segment by bracketed bisection to 1e-12 relative.
 */
inline SamplePath simulate_scaled_path_inversion(const ModelParams& p, const Policy& g,
                                                 double horizon, std::uint64_t seed,
                                                 long event_budget = 100000000L) {
    detail::SimState st(p, g, horizon, seed, event_budget);
    const double n_alpha = std::pow(static_cast<double>(p.n), p.alpha);

    std::vector<double> next_s(p.d);
    for (int i = 0; i < p.d; ++i) next_s[i] = st.arr[i].exponential(n_alpha);
    double s_cur = 0.0;

    while (true) {
        int ic = 0;
        for (int i = 1; i < p.d; ++i)
            if (next_s[i] < next_s[ic]) ic = i;
        const double s_target = next_s[ic];

        // walk clock-time segments until the target operational time is inside one
        bool horizon_reached = false;
        while (true) {
            st.charge(1);
            const double seg_end = std::min(st.next_end(), horizon);
            const double slope = st.total_slope();
            const double dlam = st.segment_lambda(st.t, seg_end, st.Ybar, slope);
            if (s_cur + dlam < s_target) {
                s_cur += dlam;
                st.advance_to(seg_end);
                if (seg_end >= horizon) { horizon_reached = true; break; }
                st.process_due_ends();
                continue;
            }
            const double t0 = st.t, y0 = st.Ybar;
            const double want = s_target - s_cur;
            const double t_star =
                (dlam == want)
                    ? seg_end
                    : bisect([&](double x) { return st.segment_lambda(t0, x, y0, slope) - want; },
                             t0, seg_end, 1e-300, 1e-12);
            st.advance_to(t_star);
            s_cur = s_target;
            st.accept_arrival(ic, t_star);
            next_s[ic] = s_target + st.arr[ic].exponential(n_alpha);
            break;
        }
        if (horizon_reached) break;
    }
    st.finish();
    return st.path;
}

// Exact piecewise integral of f(s, Ybar_n(s)) over [0, T] along a realized path.
inline double path_cumulative_intensity(const SamplePath& path, double T) {
    if (!(T >= 0.0 && T <= path.horizon))
        throw std::domain_error("path_cumulative_intensity: T outside [0, horizon]");
    double acc = 0.0;
    const auto& bp = path.breakpoints;
    const double su = path.slope_unit();
    for (std::size_t k = 0; k + 1 < bp.size() && bp[k] < T; ++k) {
        const double t1 = std::min(bp[k + 1], T);
        double ybar = 0.0;
        long ktot = 0;
        for (int i = 0; i < path.params.d; ++i) {
            ybar += path.Y[i][k];
            ktot += path.active[i][k];
        }
        ybar /= path.params.d;
        const double slope = su * static_cast<double>(ktot) / path.params.d;
        acc += detail::segment_lambda(path.params, path.policy, bp[k], t1, ybar, slope);
    }
    return acc;
}

// Z-bar_n(t) = n^{(alpha+beta-3)/2} (Ybar_n(t) - U(t) - V(t)/n^{beta-2}) on the
// requested times. Fluid must match the path configuration; the fluid limit
// itself is free of n, so one solution serves a whole n-ladder.
inline std::vector<double> fluctuation_path(const SamplePath& path, const FluidSolution& fluid,
                                            const std::vector<double>& times) {
    const ModelParams& p = path.params;
    const ModelParams& q = fluid.params;
    if (p.beta != q.beta || p.theta != q.theta || p.alpha != q.alpha || p.b != q.b ||
        p.d != q.d || !path.policy.same_as(fluid.policy))
        throw std::invalid_argument("fluctuation_path: path and fluid configurations differ");
    const double n = static_cast<double>(p.n);
    const double pref = std::pow(n, (p.alpha + p.beta - 3.0) / 2.0);
    const double bias_scale = std::pow(n, -(p.beta - 2.0));
    std::vector<double> z(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double t = times[j];
        const double ybar = evaluate_path(path, t).Ybar;
        z[j] = pref * (ybar - fluid.U_at(t) - bias_scale * fluid.V_at(t));
    }
    return z;
}

inline void write_events_csv(const SamplePath& path, const std::string& file) {
    CsvWriter w(file, {"station", "start", "duration"});
    for (const auto& e : path.events)
        w.write_row(e.station, {e.start, e.duration});
}

}  // namespace simlab
