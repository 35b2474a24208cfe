#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace simlab {

// Seed splitting. Replication r of a run seeded with base_seed owns the root
// stream splitmix64(splitmix64(base_seed) ^ golden*(r+1)); sub-stream k of a
// root is splitmix64(root ^ weyl*(k+1)). Documented so reports can state the
// exact stream identifier of every replication.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t replication_index) {
    return splitmix64(splitmix64(base_seed) ^ (0x9E3779B97F4A7C15ull * (replication_index + 1)));
}

inline std::uint64_t substream_seed(std::uint64_t root, std::uint64_t stream_id) {
    return splitmix64(root ^ (0xD1B54A32D192ED03ull * (stream_id + 1)));
}

// mt19937_64 with explicit variate conversions. The standard pins down the
// engine's output sequence, and we avoid std::*_distribution (whose sequences
// are implementation-defined), so streams are reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform on [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // exponential with given rate; strictly positive
    double exponential(double rate) {
        double u;
        do { u = uniform(); } while (u == 0.0);
        return -std::log(u) / rate;
    }

    // standard normal via Box-Muller, pair cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1;
        do { u1 = uniform(); } while (u1 == 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double c = std::cos(6.283185307179586476925286766559 * u2);
        const double s = std::sin(6.283185307179586476925286766559 * u2);
        spare_ = r * s;
        have_spare_ = true;
        return r * c;
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace simlab
