#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace floodsignal {

/// SplitMix64 finalizer. Every derived seed in the project goes through this.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for substream `stream` of `master`: mix64(master ^ mix64(stream)).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master ^ mix64(stream));
}

constexpr std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Named substream, e.g. derive_seed(master, "forest").
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
    return derive_seed(master, fnv1a(stream));
}

/// Small deterministic generator. Output depends only on the seed, never on
/// the standard library, so fixtures stay bit-stable across toolchains.
class Rng {
public:
    explicit constexpr Rng(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound). bound must be > 0.
    constexpr std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return x % bound;
    }

    /// Uniform double in [0, 1).
    constexpr double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    /// Poisson variate. Large means are split into chunks of at most 16 so
    /// the multiplication method never underflows.
    std::uint64_t poisson(double mean) {
        std::uint64_t total = 0;
        while (mean > 0.0) {
            const double chunk = mean > 16.0 ? 16.0 : mean;
            mean -= chunk;
            const double limit = std::exp(-chunk);
            double prod = uniform();
            while (prod > limit) {
                ++total;
                prod *= uniform();
            }
        }
        return total;
    }

private:
    std::uint64_t state_;
};

}  // namespace floodsignal
