#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace simlab {

struct Estimate {
    double value = 0.0;
    double se = 0.0;  // standard error if defined for the estimator, else 0
};

inline double mean_of(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline Estimate summarize_mean(const std::vector<double>& x) {
    if (x.size() < 2) throw std::invalid_argument("summarize_mean: need at least 2 samples");
    const double m = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    const double var = ss / static_cast<double>(x.size() - 1);
    return {m, std::sqrt(var / static_cast<double>(x.size()))};
}

// Unbiased variance; SE from the asymptotic Gaussian formula var*sqrt(2/(M-1)).
inline Estimate summarize_variance(const std::vector<double>& x) {
    if (x.size() < 2) throw std::invalid_argument("summarize_variance: need at least 2 samples");
    const double m = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    const double var = ss / static_cast<double>(x.size() - 1);
    return {var, var * std::sqrt(2.0 / static_cast<double>(x.size() - 1))};
}

// Unbiased covariance; SE via sqrt((cxx*cyy + cxy^2)/(M-1)), exact for
// Gaussian samples to leading order.
inline Estimate summarize_covariance(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("summarize_covariance: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("summarize_covariance: need at least 2 samples");
    const auto M = static_cast<double>(x.size());
    const double mx = mean_of(x), my = mean_of(y);
    double cxy = 0.0, cxx = 0.0, cyy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        cxy += dx * dy;
        cxx += dx * dx;
        cyy += dy * dy;
    }
    cxy /= M - 1.0;
    cxx /= M - 1.0;
    cyy /= M - 1.0;
    return {cxy, std::sqrt(std::max(0.0, cxx * cyy + cxy * cxy) / (M - 1.0))};
}

namespace detail {
// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2)
inline double ks_q(double lambda) {
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}
}  // namespace detail

struct KsResult {
    double statistic = 0.0;  // sup |F_emp - F|
    double p_value = 1.0;    // asymptotic, with the small-sample correction
};

// One-sample KS against a CDF evaluator.
template <typename Cdf>
KsResult ks_one_sample(std::vector<double> x, Cdf&& cdf) {
    if (x.size() < 2) throw std::invalid_argument("ks_one_sample: need at least 2 samples");
    std::sort(x.begin(), x.end());
    const auto n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double F = cdf(x[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::fabs(F - lo), std::fabs(hi - F)));
    }
    const double sn = std::sqrt(n);
    return {d, detail::ks_q((sn + 0.12 + 0.11 / sn) * d)};
}

// Two-sample KS. Ties are handled by comparing the two empirical CDFs at the
// pooled jump points; for heavily tied integer data the asymptotic p-value is
// conservative, which is the safe direction for agreement tests.
inline KsResult ks_two_sample(std::vector<double> x, std::vector<double> y) {
    if (x.size() < 2 || y.size() < 2) throw std::invalid_argument("ks_two_sample: need at least 2 samples each");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const auto n1 = static_cast<double>(x.size());
    const auto n2 = static_cast<double>(y.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
    }
    const double ne = std::sqrt(n1 * n2 / (n1 + n2));
    return {d, detail::ks_q((ne + 0.12 + 0.11 / ne) * d)};
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};

// Least-squares line through (log x, log y).
inline SlopeFit slope_fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("slope_fit_loglog: size mismatch");
    const std::size_t m = x.size();
    if (m < 2) throw std::invalid_argument("slope_fit_loglog: need at least 2 points");
    std::vector<double> lx(m), ly(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::domain_error("slope_fit_loglog: nonpositive input");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = mean_of(lx), my = mean_of(ly);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ssr += r * r;
    }
    fit.slope_se = (m > 2) ? std::sqrt(ssr / static_cast<double>(m - 2) / sxx) : 0.0;
    return fit;
}

// Median (by copy; sample sets here are small).
inline double median_of(std::vector<double> x) {
    if (x.empty()) throw std::invalid_argument("median_of: empty");
    std::sort(x.begin(), x.end());
    const std::size_t m = x.size();
    return (m % 2 == 1) ? x[m / 2] : 0.5 * (x[m / 2 - 1] + x[m / 2]);
}

// Kind-dispatched estimator front end. `second` carries the second sample
// (covariance, ks-two-sample) or the abscissas (slope-fit); `cdf` is the
// reference distribution for ks-one-sample. p_value is NaN for moment kinds.
struct StatSummary {
    double estimate = 0.0;
    double se = 0.0;
    double p_value = std::numeric_limits<double>::quiet_NaN();
};

template <typename Cdf>
StatSummary summarize_stats(const std::string& kind, const std::vector<double>& samples,
                            const std::vector<double>& second, Cdf&& cdf) {
    if (kind == "slope-fit") {
        if (samples.size() < 8) throw std::invalid_argument("summarize_stats: slope-fit needs at least 8 samples");
    } else if (samples.size() < 2) {
        throw std::invalid_argument("summarize_stats: need at least 2 samples");
    }
    if (kind == "mean") {
        const Estimate e = summarize_mean(samples);
        return {e.value, e.se, std::numeric_limits<double>::quiet_NaN()};
    }
    if (kind == "variance") {
        const Estimate e = summarize_variance(samples);
        return {e.value, e.se, std::numeric_limits<double>::quiet_NaN()};
    }
    if (kind == "covariance") {
        const Estimate e = summarize_covariance(samples, second);
        return {e.value, e.se, std::numeric_limits<double>::quiet_NaN()};
    }
    if (kind == "ks-one-sample") {
        const KsResult k = ks_one_sample(samples, cdf);
        return {k.statistic, 0.0, k.p_value};
    }
    if (kind == "ks-two-sample") {
        const KsResult k = ks_two_sample(samples, second);
        return {k.statistic, 0.0, k.p_value};
    }
    if (kind == "slope-fit") {
        const SlopeFit f = slope_fit_loglog(second, samples);
        return {f.slope, f.slope_se, std::numeric_limits<double>::quiet_NaN()};
    }
    throw std::invalid_argument("summarize_stats: unknown kind `" + kind + "`");
}

inline StatSummary summarize_stats(const std::string& kind, const std::vector<double>& samples,
                                   const std::vector<double>& second = {}) {
    return summarize_stats(kind, samples, second, [](double) { return 0.0; });
}

}  // namespace simlab
