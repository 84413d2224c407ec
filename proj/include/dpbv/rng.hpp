// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace dpbv {

/// SplitMix64 pseudo-random generator.
///
/// Every source of randomness in the library is a SplitMix64 stream keyed
/// by a (seed, purpose, index...) chain, so any run is reproducible from a
/// single 64-bit seed and results never depend on call order across
/// records, attributes or parties.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(uint64_t seed) noexcept : state_(seed) {}

    constexpr uint64_t next() noexcept {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * next_double();
    }

    bool next_bernoulli(double prob) noexcept { return next_double() < prob; }

    /// Unbiased integer in [0, bound) via rejection.
    uint64_t next_below(uint64_t bound) noexcept {
        const uint64_t threshold = -bound % bound;
        for (;;) {
            const uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    /// Standard normal via Box-Muller (one value per call; cache unused half).
    double next_gaussian() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        has_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    /// Stateless mix of (key, data); the basis of stream derivation.
    static constexpr uint64_t hash(uint64_t key, uint64_t data) noexcept {
        uint64_t z = key ^ data;
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Purpose tags keeping independent randomness streams separated.
namespace stream {
inline constexpr uint64_t kThresholds = 0x7468726573686f6cULL;  // "threshol"
inline constexpr uint64_t kFlipNoise = 0x666c69706e6f6973ULL;   // "flipnois"
inline constexpr uint64_t kClusterInit = 0x636c757374657269ULL; // "clusteri"
inline constexpr uint64_t kSynthetic = 0x73796e7468657469ULL;   // "syntheti"
inline constexpr uint64_t kBaseline = 0x626173656c696e65ULL;    // "baseline"
inline constexpr uint64_t kPairNoise = 0x706169726e6f6973ULL;   // "pairnois"
}  // namespace stream

/// Derive an independent stream from a root seed, a purpose tag and up to
/// three indices. Same inputs always give the same stream.
inline SplitMix64 derive_stream(uint64_t seed, uint64_t purpose, uint64_t a = 0,
                                uint64_t b = 0, uint64_t c = 0) {
    uint64_t k = SplitMix64::hash(seed, purpose);
    k = SplitMix64::hash(k, a);
    k = SplitMix64::hash(k, b);
    k = SplitMix64::hash(k, c);
    return SplitMix64(k);
}

}  // namespace dpbv
