// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "dpbv/config.hpp"
#include "dpbv/rng.hpp"

namespace dpbv {

/// The s random interval centers r_1..r_s defining one attribute's hash
/// functions. Reconstructible bit-exactly from (seed, attribute_index).
struct HashFamily {
    std::vector<double> thresholds;
    uint32_t attribute_index = 0;
};

/// Thresholds are i.i.d. uniform over the extended range [lower-t, upper+t].
/// Uniformity over the full extended range is what makes the expected
/// popcount s*2t/mu for every in-range input.
inline HashFamily derive_hash_family(const EncodingConfig& config, uint32_t attribute_index) {
    config.validate();
    HashFamily family;
    family.attribute_index = attribute_index;
    family.thresholds.resize(config.s);
    SplitMix64 rng = derive_stream(config.seed, stream::kThresholds, attribute_index);
    const double lo = config.lower - config.t;
    for (uint32_t i = 0; i < config.s; ++i)
        family.thresholds[i] = lo + config.mu() * rng.next_double();
    return family;
}

inline std::vector<HashFamily> derive_families(const EncodingScheme& scheme) {
    std::vector<HashFamily> families;
    families.reserve(scheme.dim());
    for (uint32_t a = 0; a < scheme.dim(); ++a)
        families.push_back(derive_hash_family(scheme.attribute_config(a), a));
    return families;
}

}  // namespace dpbv
