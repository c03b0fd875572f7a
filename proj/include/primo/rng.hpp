#pragma once

#include <cstdint>

namespace primo {

// Deterministic PRNG (splitmix64). The standard <random> engines are
// portable but the distributions are not, so everything that needs a random
// number goes through this type to keep runs identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). Modulo bias is negligible for the bounds used
    // here (all far below 2^32).
    std::uint64_t next_below(std::uint64_t bound) { return bound ? next_u64() % bound : 0; }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool next_bool(double p) { return next_double() < p; }

    // Derives an independent stream; used to give each worker its own
    // deterministic sequence.
    Rng fork(std::uint64_t salt) {
        Rng r(state_ ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
        r.next_u64();
        return r;
    }

private:
    std::uint64_t state_;
};

}  // namespace primo
