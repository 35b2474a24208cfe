#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace simlab {

// Thrown by parameter/policy construction when a standing assumption fails.
// The message names the offending field and the violated bound.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numerical failure (root solve divergence, factorization failure, ...).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Guard against runaway event loops.
class resource_error : public std::runtime_error {
public:
    explicit resource_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested computation is only defined for a restricted configuration
// (e.g. the long-run machinery requires b = a).
class unsupported_error : public std::invalid_argument {
public:
    explicit unsupported_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Admissible window for the rate exponent alpha given tail index beta:
// the open interval (beta-1, min{3 beta - 5, 5 - beta}), nonempty on (2,3).
inline std::pair<double, double> alpha_window(double beta) {
    if (!(beta > 2.0 && beta < 3.0))
        throw std::domain_error("alpha_window: beta out of (2,3)");
    return {beta - 1.0, std::min(3.0 * beta - 5.0, 5.0 - beta)};
}

// Scaling and shape parameters of the d-station model. `a` is derived from
// (theta, beta) and never user-supplied. Immutable after validation.
struct ModelParams {
    double beta = 2.5;   // tail index, in (2,3)
    double theta = 1.0;  // session-length scale, > 0
    double alpha = 2.0;  // rate exponent, in the alpha window
    double b = 2.0;      // target drain rate, > 0
    int d = 1;           // station count, >= 1
    long n = 1;          // scaling level, >= 1

    double a() const { return 1.0 / (theta * (beta - 2.0)); }
    bool b_equals_a() const { return b == a(); }
};

inline ModelParams validate_params(ModelParams p) {
    if (!(p.beta > 2.0 && p.beta < 3.0))
        throw validation_error("beta out of (2,3)");
    if (!(p.theta > 0.0))
        throw validation_error("theta not positive");
    if (!(p.b > 0.0))
        throw validation_error("b not positive");
    if (p.d < 1)
        throw validation_error("d below 1");
    if (p.n < 1)
        throw validation_error("n below 1");
    auto [lo, hi] = alpha_window(p.beta);
    if (!(p.alpha > lo))
        throw validation_error("alpha below beta-1");
    if (!(p.alpha < hi))
        throw validation_error("alpha above min{3 beta - 5, 5 - beta}");
    return p;
}

// Admission-control policy g with analytic derivatives and certified slope
// bounds ell <= g' <= L, |g''| <= L. Catalog only, so the bounds are exact:
//   linear(c):              g = c x,                ell = L = c
//   linear_plus_tanh(c1,c2): g = c1 x + c2 tanh x,  ell = c1, L = c1 + c2
//     (|g''| = 2 c2 sech^2|tanh| <= (4/(3 sqrt 3)) c2 < c1 + c2).
// The zero() policy is the no-control baseline g == 0; it violates ell > 0 by
// design and is accepted only by the diagnostics that ask for it explicitly.
class Policy {
public:
    enum class Kind { linear, linear_plus_tanh, zero };

    static Policy linear(double c) {
        if (!(c > 0.0)) throw validation_error("linear policy: c not positive");
        return Policy(Kind::linear, c, 0.0, c, c);
    }
    static Policy linear_plus_tanh(double c1, double c2) {
        if (!(c1 > 0.0)) throw validation_error("linear-plus-tanh policy: c1 not positive");
        if (!(c2 >= 0.0)) throw validation_error("linear-plus-tanh policy: c2 negative");
        return Policy(Kind::linear_plus_tanh, c1, c2, c1, c1 + c2);
    }
    static Policy zero() { return Policy(Kind::zero, 0.0, 0.0, 0.0, 0.0); }

    Kind kind() const { return kind_; }
    bool is_zero() const { return kind_ == Kind::zero; }
    double ell() const { return ell_; }
    double L() const { return L_; }

    double g(double x) const {
        switch (kind_) {
            case Kind::linear: return c1_ * x;
            case Kind::linear_plus_tanh: return c1_ * x + c2_ * std::tanh(x);
            default: return 0.0;
        }
    }
    double gp(double x) const {
        switch (kind_) {
            case Kind::linear: return c1_;
            case Kind::linear_plus_tanh: {
                const double th = std::tanh(x);
                return c1_ + c2_ * (1.0 - th * th);
            }
            default: return 0.0;
        }
    }
    double gpp(double x) const {
        switch (kind_) {
            case Kind::linear: return 0.0;
            case Kind::linear_plus_tanh: {
                const double th = std::tanh(x);
                return -2.0 * c2_ * (1.0 - th * th) * th;
            }
            default: return 0.0;
        }
    }

    bool same_as(const Policy& o) const {
        return kind_ == o.kind_ && c1_ == o.c1_ && c2_ == o.c2_;
    }

private:
    Policy(Kind k, double c1, double c2, double ell, double L)
        : kind_(k), c1_(c1), c2_(c2), ell_(ell), L_(L) {}
    Kind kind_;
    double c1_, c2_;
    double ell_, L_;
};

struct PolicyEval {
    double g, gp, gpp;
};

inline PolicyEval policy_eval(const Policy& g, double x) {
    return {g.g(x), g.gp(x), g.gpp(x)};
}

struct Intensity {
    double f;    // exp{-g(y - b t)}
    double f_y;  // -f g'(y - b t)
};

// Arrival intensity factor and its workload derivative at (t, y).
inline Intensity intensity_eval(const ModelParams& p, const Policy& g, double t, double y) {
    const double x = y - p.b * t;
    const double f = std::exp(-g.g(x));
    return {f, -f * g.gp(x)};
}

}  // namespace simlab
