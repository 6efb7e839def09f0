#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace calign {

// All randomness goes through this generator so that streams are the same
// on every platform (the std distributions are implementation-defined).
using Rng = std::mt19937_64;

inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) { return seed ^ trial; }

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, n), rejection sampling against modulo bias.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = Rng::max() - Rng::max() % n;
    std::uint64_t x;
    do x = rng(); while (x >= limit);
    return x % n;
}

template <class T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// Standard normal via Box-Muller (one value per call, the sine branch is dropped).
double standard_normal(Rng& rng);

}  // namespace calign
