#pragma once

#include <cstdint>

namespace qrefine {

/**
 * SplitMix64 — the portable 64-bit generator used everywhere results must
 * reproduce bit-for-bit across platforms and implementations.
 *
 * Stream-splitting rule for the simulator: a master SplitMix64 is seeded
 * with the run seed, and the q-th question's substream is a SplitMix64
 * seeded with the (q+1)-th output of the master. Substreams are consumed
 * independently, so per-question results do not depend on scheduling.
 */
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n), n > 0. Modulo bias is irrelevant for the
    // small n used here but kept out of any reproducibility contract.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

private:
    std::uint64_t state_;
};

} // namespace qrefine
