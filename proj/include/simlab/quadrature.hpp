#pragma once

#include <cmath>
#include <vector>

#include "simlab/model.hpp"

namespace simlab {

// Adaptive Gauss-Kronrod (G7, K15) with recursive bisection. Node values are
// interior, so integrable endpoint singularities are evaluated but never hit
// exactly; for algebraic singularities prefer the power substitutions below,
// which regularize the integrand instead of grinding the subdivision down.
namespace detail {

// K15 abscissae on [0,1] side (symmetric), embedded G7 weights on odd entries.
inline constexpr double gk_x[8] = {
    0.000000000000000000000000000000000, 0.207784955007898467600689403773245,
    0.405845151377397166906606412076961, 0.586087235467691130294144838258730,
    0.741531185599394439863864773280788, 0.864864423359769072789712788640926,
    0.949107912342758524526189684047851, 0.991455371120812639206854697526329};
inline constexpr double gk_wk[8] = {
    0.209482141084727828012999174891714, 0.204432940075298892414161999234649,
    0.190350578064785409913256402421014, 0.169004726639267902826583426598550,
    0.140653259715525918745189590510238, 0.104790010322250183839876322541518,
    0.063092092629978553290700663189204, 0.022935322010529224963732008058970};
inline constexpr double g7_w[4] = {
    0.417959183673469387755102040816327, 0.381830050505118944950369775488975,
    0.279705391489276667901467771423780, 0.129484966168869693270611432679082};

template <typename F>
void gk15(F&& f, double a, double b, double& result, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    fv[7] = f(c);
    for (int i = 1; i < 8; ++i) {
        fv[7 - i] = f(c - h * gk_x[i]);
        fv[7 + i] = f(c + h * gk_x[i]);
    }
    double resk = fv[7] * gk_wk[0];
    double resg = fv[7] * g7_w[0];
    for (int i = 1; i < 8; ++i) resk += gk_wk[i] * (fv[7 - i] + fv[7 + i]);
    for (int i = 1; i < 4; ++i) resg += g7_w[i] * (fv[7 - 2 * i] + fv[7 + 2 * i]);
    result = resk * h;
    err = std::fabs((resk - resg) * h);
}

template <typename F>
double adapt(F&& f, double a, double b, double tol, int depth, int max_depth,
             int& panels) {
    double r, e;
    gk15(f, a, b, r, e);
    if (e <= tol || depth >= max_depth) return r;
    ++panels;
    const double c = 0.5 * (a + b);
    return adapt(f, a, c, 0.5 * tol, depth + 1, max_depth, panels)
         + adapt(f, c, b, 0.5 * tol, depth + 1, max_depth, panels);
}

}  // namespace detail

struct QuadOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_depth = 48;
};

template <typename F>
double integrate(F&& f, double a, double b, QuadOptions opt = {}) {
    if (a == b) return 0.0;
    double r0, e0;
    detail::gk15(f, a, b, r0, e0);
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::fabs(r0));
    if (e0 <= tol) return r0;
    int panels = 0;
    return detail::adapt(f, a, b, tol, 0, opt.max_depth, panels);
}

// Integrates across interior breakpoints (kinks, singular interfaces).
template <typename F>
double integrate_segmented(F&& f, const std::vector<double>& knots, QuadOptions opt = {}) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        if (knots[i + 1] > knots[i]) s += integrate(f, knots[i], knots[i + 1], opt);
    return s;
}

// ∫_c^b h(u) (u-c)^p du with p in (-1, 0]: substitute y = (u-c)^{1+p} so the
// integrand becomes smooth when h is. Same trick mirrored for (c-u)^p below.
template <typename F>
double integrate_power_right_of(F&& h, double c, double b, double p, QuadOptions opt = {}) {
    if (b <= c) return 0.0;
    const double q = 1.0 + p;
    const double top = std::pow(b - c, q);
    return integrate([&](double y) { return h(c + std::pow(y, 1.0 / q)) / q; }, 0.0, top, opt);
}

template <typename F>
double integrate_power_left_of(F&& h, double a, double c, double p, QuadOptions opt = {}) {
    if (c <= a) return 0.0;
    const double q = 1.0 + p;
    const double top = std::pow(c - a, q);
    return integrate([&](double y) { return h(c - std::pow(y, 1.0 / q)) / q; }, 0.0, top, opt);
}

}  // namespace simlab
