// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpbv/rng.hpp"

namespace dpbv {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shared encoding parameters all custodians agree on. One instance
/// describes a single scalar range; multi-attribute data derives one
/// per-attribute view via EncodingScheme.
struct EncodingConfig {
    double lower = 0.0;
    double upper = 0.0;
    double t = 0.0;           // interval half-width of each hash window
    uint32_t s = 0;           // bit-vector length
    double epsilon = 0.0;     // per-bit privacy parameter
    uint64_t seed = 0;        // root seed for threshold derivation
    uint32_t attribute_count = 1;

    /// Effective range length after extending both ends by t.
    double mu() const noexcept { return (upper - lower) + 2.0 * t; }

    double local_view() const noexcept { return 2.0 * t; }

    void validate() const {
        if (!(upper > lower)) throw ConfigError("config: upper must exceed lower");
        if (!(t > 0.0)) throw ConfigError("config: t must be positive");
        if (s < 1) throw ConfigError("config: s must be at least 1");
        if (!(epsilon > 0.0)) throw ConfigError("config: epsilon must be positive");
        if (attribute_count < 1) throw ConfigError("config: attribute_count must be at least 1");
    }
};

struct AttributeSpec {
    std::string name;
    double lower = 0.0;
    double upper = 0.0;
};

namespace detail {
inline uint64_t mix_double(uint64_t h, double v) {
    return SplitMix64::hash(h, std::bit_cast<uint64_t>(v));
}
}  // namespace detail

/// A full dataset-level configuration: shared parameters plus one range per
/// attribute. Serialized as a single JSON document that parties exchange.
struct EncodingScheme {
    EncodingConfig base;
    std::vector<AttributeSpec> attributes;

    uint32_t dim() const noexcept { return static_cast<uint32_t>(attributes.size()); }

    EncodingConfig attribute_config(uint32_t attr) const {
        EncodingConfig c = base;
        c.lower = attributes.at(attr).lower;
        c.upper = attributes.at(attr).upper;
        c.attribute_count = dim();
        return c;
    }

    void validate() const {
        if (attributes.empty()) throw ConfigError("scheme: no attributes");
        for (uint32_t i = 0; i < dim(); ++i) attribute_config(i).validate();
    }

    /// Order-sensitive hash of every parameter; parties compare fingerprints
    /// before consolidating payloads.
    uint64_t fingerprint() const {
        uint64_t h = SplitMix64::hash(0x644b5056u, base.seed);
        h = detail::mix_double(h, base.t);
        h = SplitMix64::hash(h, base.s);
        h = detail::mix_double(h, base.epsilon);
        h = SplitMix64::hash(h, attributes.size());
        for (const auto& a : attributes) {
            for (char ch : a.name) h = SplitMix64::hash(h, static_cast<uint8_t>(ch));
            h = detail::mix_double(h, a.lower);
            h = detail::mix_double(h, a.upper);
        }
        return h;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["lower"] = base.lower;
        j["upper"] = base.upper;
        j["t"] = base.t;
        j["s"] = base.s;
        j["epsilon"] = base.epsilon;
        j["seed"] = base.seed;
        j["attributes"] = nlohmann::json::array();
        for (const auto& a : attributes)
            j["attributes"].push_back({{"name", a.name}, {"lower", a.lower}, {"upper", a.upper}});
        return j;
    }

    static EncodingScheme from_json(const nlohmann::json& j) {
        EncodingScheme s;
        s.base.lower = j.at("lower").get<double>();
        s.base.upper = j.at("upper").get<double>();
        s.base.t = j.at("t").get<double>();
        s.base.s = j.at("s").get<uint32_t>();
        s.base.epsilon = j.at("epsilon").get<double>();
        s.base.seed = j.at("seed").get<uint64_t>();
        if (j.contains("attributes")) {
            for (const auto& a : j.at("attributes")) {
                AttributeSpec spec;
                spec.name = a.at("name").get<std::string>();
                spec.lower = a.contains("lower") ? a.at("lower").get<double>() : s.base.lower;
                spec.upper = a.contains("upper") ? a.at("upper").get<double>() : s.base.upper;
                s.attributes.push_back(std::move(spec));
            }
        }
        s.base.attribute_count = std::max<uint32_t>(1, s.dim());
        return s;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw InputError("cannot write config file: " + path);
        out << to_json().dump(2) << "\n";
    }

    static EncodingScheme load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open config file: " + path);
        nlohmann::json j;
        in >> j;
        EncodingScheme s = from_json(j);
        s.validate();
        return s;
    }
};

/// Scheme with every attribute sharing the base range.
inline EncodingScheme uniform_scheme(EncodingConfig base, uint32_t dim,
                                     const std::vector<std::string>& names = {}) {
    EncodingScheme s;
    base.attribute_count = dim;
    s.base = base;
    for (uint32_t i = 0; i < dim; ++i) {
        AttributeSpec a;
        a.name = i < names.size() ? names[i] : ("a" + std::to_string(i));
        a.lower = base.lower;
        a.upper = base.upper;
        s.attributes.push_back(std::move(a));
    }
    return s;
}

}  // namespace dpbv
