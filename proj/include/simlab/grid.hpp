#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace simlab {

// Uniform time grid t_k = k*h, k = 0..steps. Stored as (horizon, steps) so
// node times are computed, never accumulated.
struct TimeGrid {
    double horizon = 0.0;
    std::size_t steps = 0;

    TimeGrid() = default;
    TimeGrid(double T, std::size_t N) : horizon(T), steps(N) {
        if (!(T > 0.0) || N == 0) throw std::domain_error("TimeGrid: need T > 0 and steps >= 1");
    }

    double step() const { return horizon / static_cast<double>(steps); }
    std::size_t size() const { return steps + 1; }
    double time(std::size_t k) const { return horizon * static_cast<double>(k) / static_cast<double>(steps); }

    // nearest node index for t in [0, horizon]
    std::size_t index_of(double t) const {
        if (t <= 0.0) return 0;
        if (t >= horizon) return steps;
        const double k = t / step();
        const auto lo = static_cast<std::size_t>(k);
        return (k - static_cast<double>(lo) < 0.5) ? lo : lo + 1;
    }

    std::vector<double> times() const {
        std::vector<double> v(size());
        for (std::size_t k = 0; k < size(); ++k) v[k] = time(k);
        return v;
    }
};

}  // namespace simlab
