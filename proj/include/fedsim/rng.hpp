#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace fedsim {

// splitmix64 finalizer; good avalanche, used for seed derivation only.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic stream seed for (master, a, b). Local training streams use
// a = center index and b = round index; other consumers pick fixed tags.
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b) {
    return mix64(mix64(mix64(master) ^ a) ^ b);
}

// Seeded random stream with fully pinned-down output. mt19937_64 is specified
// by the standard bit-for-bit; the distributions below are hand-rolled because
// <random> distribution implementations are not portable across toolchains.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // Standard normal via Box-Muller, one value per call (no cached spare).
    double normal() {
        // 1 - u in (0, 1] keeps the log argument away from zero.
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // Unbiased draw in [0, n) by rejection.
    uint64_t below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // Fisher-Yates; identical stream state gives identical permutations.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace fedsim
