// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dpbv/dataset.hpp"
#include "dpbv/rng.hpp"

namespace dpbv {

/// Isotropic Gaussian blobs; label = blob index.
inline Dataset make_blobs(const std::vector<std::vector<double>>& centers, size_t per_cluster,
                          double sigma, uint64_t seed) {
    Dataset out;
    const size_t dim = centers.empty() ? 0 : centers.front().size();
    for (size_t a = 0; a < dim; ++a) out.attribute_names.push_back("x" + std::to_string(a));
    SplitMix64 rng = derive_stream(seed, stream::kSynthetic, 0xb10b);
    uint64_t id = 0;
    for (size_t c = 0; c < centers.size(); ++c) {
        for (size_t i = 0; i < per_cluster; ++i) {
            Record rec;
            rec.id = id++;
            rec.label = static_cast<int>(c);
            for (size_t a = 0; a < dim; ++a)
                rec.values.push_back(centers[c][a] + sigma * rng.next_gaussian());
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

/// Two concentric rings; label 0 = outer, 1 = inner.
inline Dataset make_circles(size_t per_ring, double radius_outer, double radius_inner,
                            double noise_sigma, uint64_t seed) {
    Dataset out;
    out.attribute_names = {"x0", "x1"};
    SplitMix64 rng = derive_stream(seed, stream::kSynthetic, 0xc12c);
    constexpr double two_pi = 6.283185307179586476925286766559;
    uint64_t id = 0;
    for (int ring = 0; ring < 2; ++ring) {
        const double r = ring == 0 ? radius_outer : radius_inner;
        for (size_t i = 0; i < per_ring; ++i) {
            const double angle = two_pi * static_cast<double>(i) / static_cast<double>(per_ring);
            Record rec;
            rec.id = id++;
            rec.label = ring;
            rec.values = {r * std::cos(angle) + noise_sigma * rng.next_gaussian(),
                          r * std::sin(angle) + noise_sigma * rng.next_gaussian()};
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

/// Two interleaved half-moons; label = moon index.
inline Dataset make_moons(size_t per_moon, double noise_sigma, uint64_t seed) {
    Dataset out;
    out.attribute_names = {"x0", "x1"};
    SplitMix64 rng = derive_stream(seed, stream::kSynthetic, 0x30017);
    constexpr double pi = 3.1415926535897932384626433832795;
    uint64_t id = 0;
    for (int moon = 0; moon < 2; ++moon) {
        for (size_t i = 0; i < per_moon; ++i) {
            const double angle = pi * static_cast<double>(i) / static_cast<double>(per_moon - 1);
            Record rec;
            rec.id = id++;
            rec.label = moon;
            double x = std::cos(angle);
            double y = std::sin(angle);
            if (moon == 1) {
                x = 1.0 - x;
                y = 0.5 - y;
            }
            rec.values = {x + noise_sigma * rng.next_gaussian(),
                          y + noise_sigma * rng.next_gaussian()};
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

/// Uniform scalar sample on [lo, hi], unlabeled.
inline Dataset make_uniform_scalar(size_t n, double lo, double hi, uint64_t seed) {
    Dataset out;
    out.attribute_names = {"x"};
    SplitMix64 rng = derive_stream(seed, stream::kSynthetic, 0x0171f);
    for (size_t i = 0; i < n; ++i) {
        Record rec;
        rec.id = i;
        rec.values = {rng.next_uniform(lo, hi)};
        out.records.push_back(std::move(rec));
    }
    return out;
}

/// Uniform records in [lo, hi]^dim, unlabeled.
inline Dataset make_uniform(size_t n, uint32_t dim, double lo, double hi, uint64_t seed) {
    Dataset out;
    for (uint32_t a = 0; a < dim; ++a) out.attribute_names.push_back("x" + std::to_string(a));
    SplitMix64 rng = derive_stream(seed, stream::kSynthetic, 0x04171f);
    for (size_t i = 0; i < n; ++i) {
        Record rec;
        rec.id = i;
        for (uint32_t a = 0; a < dim; ++a) rec.values.push_back(rng.next_uniform(lo, hi));
        out.records.push_back(std::move(rec));
    }
    return out;
}

}  // namespace dpbv
