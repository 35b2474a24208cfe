#pragma once

#include <cmath>
#include <stdexcept>

#include "simlab/model.hpp"

namespace simlab {

// Bisection on a bracketing interval. F must change sign on [lo, hi].
// Converges to |hi - lo| <= tol_abs + tol_rel*|root|; always succeeds on a
// valid bracket, which is why the solvers here prefer it over faster but
// conditional methods.
template <typename F>
double bisect(F&& f, double lo, double hi, double tol_abs, double tol_rel = 0.0,
              int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw numeric_error("bisect: endpoints do not bracket a root");
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double w = hi - lo;
        if (w <= tol_abs + tol_rel * std::fabs(mid)) return mid;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Expands [lo, hi] geometrically until f changes sign across it. Requires f
// monotone (true for every use here: g is strictly increasing).
template <typename F>
void expand_bracket(F&& f, double& lo, double& hi, int max_doublings = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    int it = 0;
    while ((flo > 0.0) == (fhi > 0.0) && flo != 0.0 && fhi != 0.0) {
        if (++it > max_doublings)
            throw numeric_error("expand_bracket: no sign change found");
        const double w = hi - lo;
        const bool increasing = fhi > flo;
        const bool root_below = (flo > 0.0) == increasing;
        if (root_below) {
            lo -= w;
            flo = f(lo);
        } else {
            hi += w;
            fhi = f(hi);
        }
    }
}

}  // namespace simlab
