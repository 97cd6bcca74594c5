#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace plmcell::rng {

// Counter-based generator: Philox4x32-10 (Salmon et al., SC 2011).
//
// Every consumer of randomness in this project draws from a Stream keyed by
// (seed, stream_id).  Streams with distinct ids never overlap, so replicate r
// of a study produces identical numbers whether it runs alone, in a batch, or
// on a different thread count.

// One 4x32 block, 10 rounds.  Exposed for the known-answer tests.
std::array<std::uint32_t, 4> philox4x32_block(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key);

// splitmix64 finalizer; used to derive child seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Deterministic child seed for a tagged sub-experiment (e.g. the bootstrap
// inside replicate r).  Not a stream: child seeds key whole new stream spaces.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix64(seed ^ mix64(tag));
}

class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0u, 0u, static_cast<std::uint32_t>(stream_id),
                   static_cast<std::uint32_t>(stream_id >> 32)} {}

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buffer_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    // Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [a,b).
    double uniform(double a, double b) { return a + uniform01() * (b - a); }

    // Standard normal via Box-Muller; second deviate is cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), never log(0)
        const double t = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(t);
        have_cached_ = true;
        return r * std::cos(t);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Unbiased uniform integer in [0, n); n >= 1.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0ull - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;  // lanes 0,1: block counter; 2,3: stream id
    std::array<std::uint32_t, 4> buffer_{};
    int pos_ = 4;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace plmcell::rng
