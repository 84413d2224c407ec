// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpbv/clustering.hpp"
#include "dpbv/config.hpp"
#include "dpbv/dataset.hpp"
#include "dpbv/distance.hpp"
#include "dpbv/encoder.hpp"

namespace dpbv {

enum class PartitionKind { Horizontal, Vertical };
enum class VerticalMethod { Naive, Decomposition };

inline const char* partition_name(PartitionKind k) {
    return k == PartitionKind::Horizontal ? "horizontal" : "vertical";
}

/// One data custodian: a slice of the dataset plus the shared configuration.
/// Horizontal custodians hold disjoint record sets; vertical custodians hold
/// disjoint attribute ranges [attr_begin, attr_end) of every record.
struct Custodian {
    int party_id = 0;
    PartitionKind kind = PartitionKind::Horizontal;
    Dataset local;
    uint32_t attr_begin = 0;
    uint32_t attr_end = 0;
};

/// Contiguous record split; record ids keep their global values so encodings
/// are identical no matter who holds a record.
inline std::vector<Custodian> partition_horizontal(const Dataset& data, int parties) {
    if (parties < 1 || static_cast<size_t>(parties) > data.size())
        throw InputError("partition_horizontal: bad party count");
    std::vector<Custodian> out(parties);
    const size_t n = data.size();
    size_t start = 0;
    for (int p = 0; p < parties; ++p) {
        const size_t count = n / parties + (static_cast<size_t>(p) < n % parties ? 1 : 0);
        out[p].party_id = p;
        out[p].kind = PartitionKind::Horizontal;
        out[p].local.attribute_names = data.attribute_names;
        out[p].local.records.assign(data.records.begin() + start,
                                    data.records.begin() + start + count);
        start += count;
    }
    return out;
}

/// Contiguous attribute split covering [0, d).
inline std::vector<Custodian> partition_vertical(const Dataset& data, int parties) {
    const uint32_t d = data.dim();
    if (parties < 1 || static_cast<uint32_t>(parties) > d)
        throw InputError("partition_vertical: bad party count");
    std::vector<Custodian> out(parties);
    uint32_t start = 0;
    for (int p = 0; p < parties; ++p) {
        const uint32_t count = d / parties + (static_cast<uint32_t>(p) < d % parties ? 1 : 0);
        out[p].party_id = p;
        out[p].kind = PartitionKind::Vertical;
        out[p].attr_begin = start;
        out[p].attr_end = start + count;
        for (uint32_t a = start; a < start + count; ++a)
            out[p].local.attribute_names.push_back(data.attribute_names[a]);
        out[p].local.records.reserve(data.size());
        for (const auto& rec : data.records) {
            Record slice;
            slice.id = rec.id;
            slice.values.assign(rec.values.begin() + start, rec.values.begin() + start + count);
            out[p].local.records.push_back(std::move(slice));
        }
        start += count;
    }
    return out;
}

// --- pairwise estimators -----------------------------------------------------

/// Distance between two encoded records in the horizontal setting:
/// per-attribute raw estimates, negatives clamped, combined in quadrature.
inline double horizontal_estimate(const EncodedRecord& a, const EncodedRecord& b,
                                  const EncodingScheme& scheme, Mechanism mechanism) {
    return pair_distance_estimate(a, b, scheme, mechanism);
}

/// Squared-distance contribution of encoded attributes [attr_begin, attr_end)
/// in the vertical setting, one estimate per attribute.
inline double vertical_naive_r2(const EncodedRecord& a, const EncodedRecord& b,
                                const EncodingScheme& scheme, Mechanism mechanism,
                                uint32_t attr_begin, uint32_t attr_end) {
    double sum_sq = 0.0;
    for (uint32_t attr = attr_begin; attr < attr_end; ++attr) {
        const double h = hamming_distance(a.vectors[attr - attr_begin],
                                          b.vectors[attr - attr_begin]);
        const double raw = estimate_raw(h, scheme.attribute_config(attr), mechanism);
        const double e = std::max(0.0, raw);
        sum_sq += e * e;
    }
    return sum_sq;
}

/// Scalar encoding scheme for the decomposition aggregates S1 and S2. Both
/// live in [0, mu_max] with mu_max = 2 * sum of squared attribute bounds, and
/// t covers half the range so any |S1 - S2| stays inside the local view.
struct DecompositionScheme {
    EncodingConfig config;
    HashFamily family;
    double mu_max = 0.0;
};

inline DecompositionScheme make_decomposition_scheme(const EncodingScheme& scheme,
                                                     uint32_t attr_begin, uint32_t attr_end) {
    double mu_max = 0.0;
    for (uint32_t a = attr_begin; a < attr_end; ++a) {
        const auto& spec = scheme.attributes.at(a);
        if (spec.lower < 0.0)
            throw InputError("decomposition requires non-negative attribute ranges");
        mu_max += 2.0 * spec.upper * spec.upper;
    }
    DecompositionScheme out;
    out.mu_max = mu_max;
    out.config = scheme.base;
    out.config.lower = 0.0;
    out.config.upper = mu_max;
    out.config.t = mu_max / 2.0;
    out.config.attribute_count = 1;
    // independent threshold stream; not one of the per-attribute families
    out.config.seed = SplitMix64::hash(scheme.base.seed, 0xdec0);
    out.family = derive_hash_family(out.config, 0);
    return out;
}

struct DecompositionPair {
    double s1 = 0.0;  // sum of squared values of both records
    double s2 = 0.0;  // twice the sum of cross products
};

inline DecompositionPair decomposition_aggregates(std::span<const double> values_a,
                                                  std::span<const double> values_b) {
    if (values_a.size() != values_b.size())
        throw InputError("decomposition_aggregates: dimension mismatch");
    DecompositionPair out;
    for (size_t i = 0; i < values_a.size(); ++i) {
        if (values_a[i] < 0.0 || values_b[i] < 0.0)
            throw InputError("decomposition requires non-negative values");
        out.s1 += values_a[i] * values_a[i] + values_b[i] * values_b[i];
        out.s2 += 2.0 * values_a[i] * values_b[i];
    }
    return out;
}

/// One-shot estimate of the squared remainder distance: encode the two
/// scalar aggregates (fresh noise per pair, thresholds fixed) and decode
/// their distance, which equals S1 - S2 = sum (a_i - b_i)^2. Raw value;
/// callers clamp at zero.
inline double vertical_decomposition_r2(std::span<const double> values_a,
                                        std::span<const double> values_b,
                                        const DecompositionScheme& dec, Mechanism mechanism,
                                        SplitMix64& noise) {
    const DecompositionPair agg = decomposition_aggregates(values_a, values_b);
    const BitVector enc1 = encode_value(agg.s1, dec.family, dec.config, mechanism, noise);
    const BitVector enc2 = encode_value(agg.s2, dec.family, dec.config, mechanism, noise);
    const double h = hamming_distance(enc1, enc2);
    return estimate_raw(h, dec.config, mechanism);
}

}  // namespace dpbv
