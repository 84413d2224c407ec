// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpbv/bitvector.hpp"
#include "dpbv/config.hpp"
#include "dpbv/dataset.hpp"
#include "dpbv/hash_family.hpp"
#include "dpbv/rng.hpp"

namespace dpbv {

enum class Mechanism : uint8_t { BV = 0, DPBV = 1 };

inline const char* mechanism_name(Mechanism m) {
    return m == Mechanism::BV ? "bv" : "dpbv";
}

inline Mechanism mechanism_from_name(const std::string& name) {
    if (name == "bv") return Mechanism::BV;
    if (name == "dpbv") return Mechanism::DPBV;
    throw InputError("unknown mechanism: " + name);
}

/// Probability that a randomized-response bit keeps its value.
inline double keep_probability(double epsilon) {
    return std::exp(epsilon) / (std::exp(epsilon) + 1.0);
}

/// Probability that a randomized-response bit is flipped.
inline double flip_probability(double epsilon) {
    return 1.0 / (std::exp(epsilon) + 1.0);
}

namespace detail {
inline void check_in_range(double x, const EncodingConfig& config) {
    if (!(x >= config.lower && x <= config.upper))
        throw InputError("value " + std::to_string(x) + " outside encoding range [" +
                         std::to_string(config.lower) + ", " + std::to_string(config.upper) + "]");
}
}  // namespace detail

/// Deterministic interval-membership encoding: bit i is set iff
/// x lands inside [r_i - t, r_i + t].
inline BitVector bv_encode(double x, const HashFamily& family, const EncodingConfig& config) {
    detail::check_in_range(x, config);
    BitVector out(config.s);
    const double t = config.t;
    for (uint32_t i = 0; i < config.s; ++i) {
        const double r = family.thresholds[i];
        if (x >= r - t && x <= r + t) out.set_bit(i, true);
    }
    return out;
}

/// Interval-membership encoding followed by independent per-bit randomized
/// response: each bit keeps its value with probability e^eps/(e^eps+1) and
/// flips otherwise. Thresholds stay fixed; only flips consume the stream,
/// so re-encoding the same value produces fresh noise.
inline BitVector dpbv_encode(double x, const HashFamily& family, const EncodingConfig& config,
                             SplitMix64& noise) {
    detail::check_in_range(x, config);
    BitVector out = bv_encode(x, family, config);
    const double q = flip_probability(config.epsilon);
    for (uint32_t i = 0; i < config.s; ++i)
        if (noise.next_bernoulli(q)) out.set_bit(i, !out.bit(i));
    return out;
}

inline BitVector encode_value(double x, const HashFamily& family, const EncodingConfig& config,
                              Mechanism mechanism, SplitMix64& noise) {
    return mechanism == Mechanism::BV ? bv_encode(x, family, config)
                                      : dpbv_encode(x, family, config, noise);
}

struct EncodedRecord {
    uint64_t id = 0;
    std::vector<BitVector> vectors;  // one per attribute
};

struct EncodedDataset {
    Mechanism mechanism = Mechanism::BV;
    uint64_t config_fingerprint = 0;
    uint32_t s = 0;
    uint32_t dim = 0;
    std::vector<EncodedRecord> records;

    size_t size() const noexcept { return records.size(); }
};

/// Encode one record. Flip noise is keyed by (noise_seed, record id,
/// attribute), so the result does not depend on who encodes the record or
/// in which order — a horizontally partitioned dataset consolidates to the
/// same bits as a centralized run.
inline EncodedRecord encode_record(const Record& record, const std::vector<HashFamily>& families,
                                   const EncodingScheme& scheme, Mechanism mechanism,
                                   uint64_t noise_seed) {
    if (record.values.size() != families.size())
        throw InputError("record dimension " + std::to_string(record.values.size()) +
                         " does not match family count " + std::to_string(families.size()));
    EncodedRecord out;
    out.id = record.id;
    out.vectors.reserve(families.size());
    for (size_t a = 0; a < families.size(); ++a) {
        SplitMix64 noise = derive_stream(noise_seed, stream::kFlipNoise, record.id, a);
        out.vectors.push_back(
            encode_value(record.values[a], families[a], scheme.attribute_config(static_cast<uint32_t>(a)),
                         mechanism, noise));
    }
    return out;
}

inline EncodedDataset encode_dataset(const Dataset& data, const EncodingScheme& scheme,
                                     Mechanism mechanism, uint64_t noise_seed) {
    scheme.validate();
    if (data.dim() != scheme.dim())
        throw InputError("dataset dimension does not match scheme");
    const auto families = derive_families(scheme);
    EncodedDataset out;
    out.mechanism = mechanism;
    out.config_fingerprint = scheme.fingerprint();
    out.s = scheme.base.s;
    out.dim = scheme.dim();
    out.records.reserve(data.size());
    for (const auto& rec : data.records)
        out.records.push_back(encode_record(rec, families, scheme, mechanism, noise_seed));
    return out;
}

/// Encode an attribute slice [attr_begin, attr_end) of records holding only
/// that slice. Hash families and noise streams are keyed by the global
/// attribute index, so the bits match what a centralized encoder would
/// produce for the same attributes.
inline EncodedDataset encode_dataset_slice(const Dataset& slice, const EncodingScheme& full_scheme,
                                           uint32_t attr_begin, uint32_t attr_end,
                                           Mechanism mechanism, uint64_t noise_seed) {
    full_scheme.validate();
    if (attr_begin >= attr_end || attr_end > full_scheme.dim())
        throw InputError("encode_dataset_slice: bad attribute range");
    if (slice.dim() != attr_end - attr_begin)
        throw InputError("encode_dataset_slice: slice dimension mismatch");
    EncodedDataset out;
    out.mechanism = mechanism;
    out.config_fingerprint = full_scheme.fingerprint();
    out.s = full_scheme.base.s;
    out.dim = attr_end - attr_begin;
    out.records.reserve(slice.size());
    std::vector<HashFamily> families;
    for (uint32_t a = attr_begin; a < attr_end; ++a)
        families.push_back(derive_hash_family(full_scheme.attribute_config(a), a));
    for (const auto& rec : slice.records) {
        EncodedRecord er;
        er.id = rec.id;
        for (uint32_t a = attr_begin; a < attr_end; ++a) {
            SplitMix64 noise = derive_stream(noise_seed, stream::kFlipNoise, rec.id, a);
            er.vectors.push_back(encode_value(rec.values[a - attr_begin], families[a - attr_begin],
                                              full_scheme.attribute_config(a), mechanism, noise));
        }
        out.records.push_back(std::move(er));
    }
    return out;
}

struct MediatedValues {
    std::vector<double> values;
    std::vector<bool> synthetic;  // true entries are excluded from reported output
};

/// Insert evenly spaced synthetic values between consecutive entries whose
/// gap is at least 2t, so every resulting gap is strictly below 2t. The
/// synthetic mask lets callers drop the helpers from any reported result.
inline MediatedValues insert_mediating_values(const std::vector<double>& sorted_values, double t) {
    if (!(t > 0.0)) throw InputError("insert_mediating_values: t must be positive");
    for (size_t i = 1; i < sorted_values.size(); ++i)
        if (sorted_values[i] < sorted_values[i - 1])
            throw InputError("insert_mediating_values: values must be sorted ascending");
    MediatedValues out;
    const double window = 2.0 * t;
    for (size_t i = 0; i < sorted_values.size(); ++i) {
        if (i > 0) {
            const double prev = sorted_values[i - 1];
            const double gap = sorted_values[i] - prev;
            if (gap >= window) {
                size_t inserts = static_cast<size_t>(std::floor(gap / window));
                while (gap / static_cast<double>(inserts + 1) >= window) ++inserts;
                const double step = gap / static_cast<double>(inserts + 1);
                for (size_t k = 1; k <= inserts; ++k) {
                    out.values.push_back(prev + step * static_cast<double>(k));
                    out.synthetic.push_back(true);
                }
            }
        }
        out.values.push_back(sorted_values[i]);
        out.synthetic.push_back(false);
    }
    return out;
}

// --- encoded dataset serialization -----------------------------------------
//
// Binary layout (all little-endian):
//   magic "DPBV" | u16 version | u8 mechanism | u8 reserved
//   u32 s | u32 dim | u64 n | u64 config fingerprint
//   then per record: u64 id, dim * ceil(s/8) bytes, attribute-major,
//   bit i of a vector at byte i/8, bit position i%8.

namespace detail {
inline void put_u16(std::ostream& out, uint16_t v) {
    for (int i = 0; i < 2; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u32(std::ostream& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::ostream& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline uint16_t get_u16(std::istream& in) {
    uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<uint16_t>(static_cast<uint8_t>(in.get())) << (8 * i);
    return v;
}
inline uint32_t get_u32(std::istream& in) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(in.get())) << (8 * i);
    return v;
}
inline uint64_t get_u64(std::istream& in) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(in.get())) << (8 * i);
    return v;
}
}  // namespace detail

inline void write_encoded(const EncodedDataset& enc, std::ostream& out) {
    out.write("DPBV", 4);
    detail::put_u16(out, 1);
    out.put(static_cast<char>(enc.mechanism));
    out.put(0);
    detail::put_u32(out, enc.s);
    detail::put_u32(out, enc.dim);
    detail::put_u64(out, enc.records.size());
    detail::put_u64(out, enc.config_fingerprint);
    for (const auto& rec : enc.records) {
        detail::put_u64(out, rec.id);
        for (const auto& vec : rec.vectors) {
            const auto bytes = vec.to_bytes();
            out.write(reinterpret_cast<const char*>(bytes.data()),
                      static_cast<std::streamsize>(bytes.size()));
        }
    }
}

inline void write_encoded(const EncodedDataset& enc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write encoded dataset: " + path);
    write_encoded(enc, out);
}

inline EncodedDataset read_encoded(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "DPBV")
        throw InputError("not an encoded dataset (bad magic)");
    const uint16_t version = detail::get_u16(in);
    if (version != 1) throw InputError("unsupported encoded-dataset version");
    EncodedDataset enc;
    enc.mechanism = static_cast<Mechanism>(in.get());
    in.get();  // reserved
    enc.s = detail::get_u32(in);
    enc.dim = detail::get_u32(in);
    const uint64_t n = detail::get_u64(in);
    enc.config_fingerprint = detail::get_u64(in);
    const size_t vec_bytes = (enc.s + 7) / 8;
    std::vector<uint8_t> buf(vec_bytes);
    enc.records.reserve(n);
    for (uint64_t r = 0; r < n; ++r) {
        EncodedRecord rec;
        rec.id = detail::get_u64(in);
        rec.vectors.reserve(enc.dim);
        for (uint32_t a = 0; a < enc.dim; ++a) {
            in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(vec_bytes));
            if (!in) throw InputError("truncated encoded dataset");
            rec.vectors.push_back(BitVector::from_bytes(enc.s, buf.data(), buf.size()));
        }
        enc.records.push_back(std::move(rec));
    }
    return enc;
}

inline EncodedDataset read_encoded(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open encoded dataset: " + path);
    return read_encoded(in);
}

/// Debug format for cross-implementation comparisons: one JSON object per
/// record with explicit 0/1 arrays.
inline void write_encoded_jsonl(const EncodedDataset& enc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write jsonl: " + path);
    for (const auto& rec : enc.records) {
        nlohmann::json j;
        j["id"] = rec.id;
        auto vectors = nlohmann::json::array();
        for (const auto& vec : rec.vectors) {
            auto bits = nlohmann::json::array();
            for (uint32_t i = 0; i < vec.size(); ++i) bits.push_back(vec.bit(i) ? 1 : 0);
            vectors.push_back(std::move(bits));
        }
        j["vectors"] = std::move(vectors);
        out << j.dump() << "\n";
    }
}

}  // namespace dpbv
