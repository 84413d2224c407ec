// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpbv/bitvector.hpp"
#include "dpbv/config.hpp"
#include "dpbv/encoder.hpp"
#include "dpbv/hash_family.hpp"

namespace dpbv {

struct PrivacyParams {
    double epsilon = 0.0;
    double log_delta = -std::numeric_limits<double>::infinity();  // natural log
    uint32_t s = 0;
    double beta = 0.05;
};

/// log of delta = p^s - e^eps * q^s with p = e^eps/(e^eps+1), q = 1 - p.
/// Factoring the dominant p^s keeps values like 1e-137 exact in log space.
/// Returns -inf for s = 1 (a single bit is pure eps-LDP).
inline double log_delta_of(double epsilon, uint32_t s) {
    if (!(epsilon > 0.0)) throw ConfigError("log_delta_of: epsilon must be positive");
    if (s < 1) throw ConfigError("log_delta_of: s must be at least 1");
    // log p = -log(1 + e^-eps), stable for every positive epsilon.
    const double log_p = -std::log1p(std::exp(-epsilon));
    // delta = p^s * (1 - e^{-eps (s-1)})  since e^eps * q^s = p^s * e^{-eps(s-1)}.
    const double correction = -std::expm1(-epsilon * static_cast<double>(s - 1));
    if (correction <= 0.0) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(s) * log_p + std::log(correction);
}

inline double log10_delta_of(double epsilon, uint32_t s) {
    return log_delta_of(epsilon, s) / std::log(10.0);
}

/// Linear-space delta; underflows to 0 below ~1e-308, use the log form then.
inline double delta_of(double epsilon, uint32_t s) {
    return std::exp(log_delta_of(epsilon, s));
}

/// Decimal scientific rendering of a natural-log delta, e.g. "7.5e-56".
inline std::string format_delta(double log_delta, int mantissa_digits = 2) {
    if (std::isinf(log_delta) && log_delta < 0) return "0";
    const double l10 = log_delta / std::log(10.0);
    double exp10 = std::floor(l10);
    double mantissa = std::pow(10.0, l10 - exp10);
    // rounding may push the mantissa to 10.0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", mantissa_digits - 1, mantissa);
    if (std::string(buf).substr(0, 2) == "10") {
        exp10 += 1.0;
        std::snprintf(buf, sizeof(buf), "%.*f", mantissa_digits - 1, 1.0);
    }
    return std::string(buf) + "e" + ((exp10 < 0) ? "-" : "+") +
           std::to_string(static_cast<long long>(std::abs(exp10)));
}

struct VectorLengthChoice {
    uint32_t s = 0;
    double achieved_log_delta = 0.0;  // log delta actually reached at this s
};

/// Smallest vector length meeting a (epsilon, delta) target:
/// ceil(ln delta / (eps - ln(e^eps + 1))), cross-checked against the exact
/// delta so the returned length is guaranteed to satisfy the request.
inline VectorLengthChoice s_of_log(double epsilon, double log_delta_target) {
    if (!(epsilon > 0.0)) throw ConfigError("s_of: epsilon must be positive");
    if (!(log_delta_target < 0.0)) throw ConfigError("s_of: delta must be below 1");
    const double log_p = -std::log1p(std::exp(-epsilon));  // = eps - ln(e^eps+1)
    uint32_t s = static_cast<uint32_t>(std::max(1.0, std::ceil(log_delta_target / log_p)));
    while (log_delta_of(epsilon, s) > log_delta_target) ++s;
    return {s, log_delta_of(epsilon, s)};
}

inline VectorLengthChoice s_of(double epsilon, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("s_of: delta must be in (0,1)");
    return s_of_log(epsilon, std::log(delta));
}

/// Expected number of set bits; independent of the encoded value, which is
/// the indistinguishability argument for the aggregator's view.
inline double expected_popcount(const EncodingConfig& config, Mechanism mechanism) {
    config.validate();
    const double ratio = 2.0 * config.t / config.mu();
    if (mechanism == Mechanism::BV) return static_cast<double>(config.s) * ratio;
    const double e = std::exp(config.epsilon);
    return static_cast<double>(config.s) * (ratio * (e - 1.0) / (e + 1.0) + 1.0 / (e + 1.0));
}

/// High-probability bound on |estimate - true distance| that holds with
/// probability at least 1 - beta. The BV variant is the noiseless limit of
/// the same bound (amplification factor 1).
inline double error_bound(const EncodingConfig& config, double beta,
                          Mechanism mechanism = Mechanism::DPBV) {
    config.validate();
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("error_bound: beta must be in (0,1)");
    double factor = 1.0;
    if (mechanism == Mechanism::DPBV) {
        const double e = std::exp(config.epsilon);
        factor = (e + 1.0) / (e - 1.0);
        factor *= factor;
    }
    return config.mu() / 2.0 * factor *
           std::sqrt(std::log(2.0 / beta) / (2.0 * static_cast<double>(config.s)));
}

inline constexpr uint32_t kMaxEnumerationBits = 20;

/// Exact output distribution of the mechanism for one input: probability of
/// each of the 2^s bit patterns. Enumeration only, so s is capped.
inline std::vector<double> output_distribution(double x, const HashFamily& family,
                                               const EncodingConfig& config) {
    config.validate();
    if (config.s > kMaxEnumerationBits)
        throw ConfigError("output_distribution: s too large for exact enumeration (max " +
                          std::to_string(kMaxEnumerationBits) + ")");
    const BitVector base = bv_encode(x, family, config);
    const double p = keep_probability(config.epsilon);
    const double q = flip_probability(config.epsilon);
    uint64_t base_bits = 0;
    for (uint32_t i = 0; i < config.s; ++i)
        if (base.bit(i)) base_bits |= 1ULL << i;
    const uint64_t n_outputs = 1ULL << config.s;
    std::vector<double> probs(n_outputs);
    for (uint64_t o = 0; o < n_outputs; ++o) {
        const int disagree = std::popcount(o ^ base_bits);
        probs[o] = std::pow(p, static_cast<double>(config.s - disagree)) *
                   std::pow(q, static_cast<double>(disagree));
    }
    return probs;
}

struct CandidateLikelihood {
    double x = 0.0;
    double log_likelihood = 0.0;
};

/// Log-likelihood of an observed output under each candidate input. What a
/// malicious party with the full configuration could compute; stays in log
/// space because single-output probabilities vanish for realistic s.
inline std::vector<CandidateLikelihood> posterior_over_inputs(const BitVector& observed,
                                                              const HashFamily& family,
                                                              const EncodingConfig& config,
                                                              const std::vector<double>& grid) {
    config.validate();
    const double log_p = std::log(keep_probability(config.epsilon));
    const double log_q = std::log(flip_probability(config.epsilon));
    std::vector<CandidateLikelihood> out;
    out.reserve(grid.size());
    for (double x : grid) {
        const BitVector pattern = bv_encode(x, family, config);
        const uint32_t disagree = hamming_distance(observed, pattern);
        out.push_back({x, static_cast<double>(config.s - disagree) * log_p +
                              static_cast<double>(disagree) * log_q});
    }
    return out;
}

/// max over outputs of Pr[o | pattern_a] - e^eps * Pr[o | pattern_b], by
/// exhaustive enumeration. Used to check the composition delta is tight.
inline double max_privacy_gap(const BitVector& pattern_a, const BitVector& pattern_b,
                              double epsilon) {
    if (pattern_a.size() != pattern_b.size())
        throw InputError("max_privacy_gap: pattern length mismatch");
    const uint32_t s = pattern_a.size();
    if (s > kMaxEnumerationBits) throw ConfigError("max_privacy_gap: s too large");
    const double p = keep_probability(epsilon);
    const double q = flip_probability(epsilon);
    const double e = std::exp(epsilon);
    uint64_t bits_a = 0, bits_b = 0;
    for (uint32_t i = 0; i < s; ++i) {
        if (pattern_a.bit(i)) bits_a |= 1ULL << i;
        if (pattern_b.bit(i)) bits_b |= 1ULL << i;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (uint64_t o = 0; o < (1ULL << s); ++o) {
        const int da = std::popcount(o ^ bits_a);
        const int db = std::popcount(o ^ bits_b);
        const double pa = std::pow(p, static_cast<double>(s - da)) * std::pow(q, da);
        const double pb = std::pow(p, static_cast<double>(s - db)) * std::pow(q, db);
        best = std::max(best, pa - e * pb);
    }
    return best;
}

}  // namespace dpbv
