// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dpbv/bitvector.hpp"
#include "dpbv/config.hpp"
#include "dpbv/dataset.hpp"
#include "dpbv/encoder.hpp"
#include "dpbv/privacy.hpp"

namespace dpbv {

/// Dense symmetric n x n buffer.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(size_t n, double fill = 0.0) : n_(n), v_(n * n, fill) {}

    size_t size() const noexcept { return n_; }
    double at(size_t i, size_t j) const { return v_[i * n_ + j]; }
    void set(size_t i, size_t j, double value) { v_[i * n_ + j] = value; }
    void set_symmetric(size_t i, size_t j, double value) {
        v_[i * n_ + j] = value;
        v_[j * n_ + i] = value;
    }
    const std::vector<double>& values() const noexcept { return v_; }
    std::vector<double>& values() noexcept { return v_; }

private:
    size_t n_ = 0;
    std::vector<double> v_;
};

/// Estimated pairwise distances plus, per entry, the consistence round that
/// last revised it (0 = original estimate).
struct DistanceMatrix {
    Matrix distances;
    std::vector<uint32_t> revision;

    size_t size() const noexcept { return distances.size(); }

    static DistanceMatrix from(Matrix m) {
        DistanceMatrix out;
        out.revision.assign(m.size() * m.size(), 0);
        out.distances = std::move(m);
        return out;
    }
};

// --- scalar estimators ------------------------------------------------------

/// Noiseless decoding: distance = mu * d_H / (2s). Saturates at 2t for pairs
/// beyond the local view.
inline double bv_estimate(double hamming, const EncodingConfig& config) {
    return config.mu() * hamming / (2.0 * static_cast<double>(config.s));
}

/// Unbiased inversion of the randomized-response Hamming distance. May be
/// negative for small observed distances; callers that need a metric clamp.
inline double dpbv_estimate_raw(double hamming, const EncodingConfig& config) {
    if (!(config.epsilon > 0.0))
        throw ConfigError("dpbv_estimate: epsilon must be positive");
    const double e = std::exp(config.epsilon);
    const double amplify = (e + 1.0) / (e - 1.0);
    const double s = static_cast<double>(config.s);
    return config.mu() / (2.0 * s) * amplify * amplify * hamming -
           config.mu() * e / ((e - 1.0) * (e - 1.0));
}

/// Raw estimate clamped to the representable range [0, 2t].
inline double dpbv_estimate(double hamming, const EncodingConfig& config) {
    return std::clamp(dpbv_estimate_raw(hamming, config), 0.0, config.local_view());
}

inline double estimate_raw(double hamming, const EncodingConfig& config, Mechanism mechanism) {
    return mechanism == Mechanism::BV ? bv_estimate(hamming, config)
                                      : dpbv_estimate_raw(hamming, config);
}

/// Expected Hamming distance between two encodings at true distance d.
/// Distances beyond the local view saturate (window overlap is empty).
inline double expected_hamming(double true_distance, const EncodingConfig& config,
                               Mechanism mechanism) {
    const double d_eff = std::min(std::abs(true_distance), config.local_view());
    const double s = static_cast<double>(config.s);
    const double rho = 2.0 * d_eff / config.mu();
    if (mechanism == Mechanism::BV) return s * rho;
    const double e = std::exp(config.epsilon);
    const double keep2 = (e * e + 1.0) / ((e + 1.0) * (e + 1.0));  // both kept or both flipped
    const double cross = 2.0 * e / ((e + 1.0) * (e + 1.0));        // exactly one flipped
    return s * rho * keep2 + s * (1.0 - rho) * cross;
}

/// Probability that one corresponding bit pair disagrees.
inline double bit_disagreement_probability(double true_distance, const EncodingConfig& config,
                                           Mechanism mechanism) {
    return expected_hamming(true_distance, config, mechanism) / static_cast<double>(config.s);
}

// --- matrix construction ----------------------------------------------------

namespace detail {
template <typename Fn>
void parallel_rows(size_t n, unsigned workers, Fn&& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    if (workers <= 1 || n < 2 * workers) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (size_t i = w; i < n; i += workers) fn(i);
        });
    for (auto& th : pool) th.join();
}
}  // namespace detail

/// Per-attribute raw estimate for one record pair; negatives are clamped to
/// zero before squaring so noise cannot inflate the combined distance.
inline double pair_distance_estimate(const EncodedRecord& a, const EncodedRecord& b,
                                     const EncodingScheme& scheme, Mechanism mechanism) {
    if (a.vectors.size() != b.vectors.size())
        throw InputError("pair_distance_estimate: attribute count mismatch");
    double sum_sq = 0.0;
    for (size_t attr = 0; attr < a.vectors.size(); ++attr) {
        const double h = hamming_distance(a.vectors[attr], b.vectors[attr]);
        const double raw =
            estimate_raw(h, scheme.attribute_config(static_cast<uint32_t>(attr)), mechanism);
        const double e = std::max(0.0, raw);
        sum_sq += e * e;
    }
    return std::sqrt(sum_sq);
}

/// Pairwise estimated Euclidean distances of an encoded dataset. Each
/// unordered pair is computed once; the diagonal is zero.
inline DistanceMatrix build_distance_matrix(const EncodedDataset& enc, const EncodingScheme& scheme,
                                            unsigned workers = 1) {
    if (enc.config_fingerprint != scheme.fingerprint())
        throw InputError("build_distance_matrix: encoded data does not match scheme");
    const size_t n = enc.size();
    Matrix m(n, 0.0);
    detail::parallel_rows(n, workers, [&](size_t i) {
        for (size_t j = i + 1; j < n; ++j) {
            const double d = pair_distance_estimate(enc.records[i], enc.records[j], scheme,
                                                    enc.mechanism);
            m.set(i, j, d);
            m.set(j, i, d);
        }
    });
    return DistanceMatrix::from(std::move(m));
}

/// Signed raw estimates for one-attribute data; keeps the estimator's affine
/// form intact so averages of entries stay unbiased.
inline Matrix build_raw_scalar_matrix(const EncodedDataset& enc, const EncodingScheme& scheme,
                                      unsigned workers = 1) {
    if (enc.dim != 1) throw InputError("build_raw_scalar_matrix: requires one attribute");
    const size_t n = enc.size();
    const EncodingConfig config = scheme.attribute_config(0);
    Matrix m(n, 0.0);
    detail::parallel_rows(n, workers, [&](size_t i) {
        for (size_t j = i; j < n; ++j) {
            const double h = hamming_distance(enc.records[i].vectors[0], enc.records[j].vectors[0]);
            const double raw = estimate_raw(h, config, enc.mechanism);
            m.set(i, j, raw);
            m.set(j, i, raw);
        }
    });
    return m;
}

/// True Euclidean distances, for baselines and evaluation.
inline Matrix exact_distance_matrix(const Dataset& data, unsigned workers = 1) {
    const size_t n = data.size();
    Matrix m(n, 0.0);
    detail::parallel_rows(n, workers, [&](size_t i) {
        for (size_t j = i + 1; j < n; ++j) {
            double sum_sq = 0.0;
            for (size_t a = 0; a < data.records[i].values.size(); ++a) {
                const double diff = data.records[i].values[a] - data.records[j].values[a];
                sum_sq += diff * diff;
            }
            const double d = std::sqrt(sum_sq);
            m.set(i, j, d);
            m.set(j, i, d);
        }
    });
    return m;
}

// --- whole-range consistence correction -------------------------------------

struct ConsistenceOptions {
    /// Residual tolerance of the additivity test |D(i,j)+D(j,k)-D(i,k)|.
    double tolerance = 0.0;
    /// Skip detection entirely when the caller knows the local-view radius.
    std::optional<double> known_local_radius;
    /// Witnesses j required before a pair counts as verified-additive.
    uint32_t min_witnesses = 3;
    /// The detected maximum overshoots the saturation plateau by sampling
    /// jitter; shrink it by this many tolerances before trusting entries.
    /// Entries above the shrunk radius are rebuilt from chains, which is
    /// cheap to get wrong the other way: one saturated entry trusted as
    /// local corrupts every chain routed through it.
    double radius_margin = 3.0;
    /// 0 means one round per matrix row (the path-length bound).
    uint32_t max_rounds = 0;
};

/// Largest matrix entry whose pair is verified additive: some j decomposes
/// D(i,k) into D(i,j) + D(j,k) within the tolerance, with at least
/// min_witnesses distinct j agreeing. Returns nothing when no pair verifies.
inline std::optional<double> detect_local_radius(const Matrix& m, double tolerance,
                                                 uint32_t min_witnesses = 3) {
    const size_t n = m.size();
    if (n < 3) return std::nullopt;
    const uint32_t needed = std::max<uint32_t>(
        1, std::min<uint32_t>(min_witnesses, static_cast<uint32_t>(n - 2)));
    std::optional<double> best;
    for (size_t i = 0; i < n; ++i) {
        for (size_t k = i + 1; k < n; ++k) {
            const double target = m.at(i, k);
            if (best && target <= *best) continue;
            uint32_t witnesses = 0;
            for (size_t j = 0; j < n && witnesses < needed; ++j) {
                if (j == i || j == k) continue;
                if (std::abs(m.at(i, j) + m.at(j, k) - target) <= tolerance) ++witnesses;
            }
            if (witnesses >= needed) best = target;
        }
    }
    return best;
}

struct ConsistenceResult {
    DistanceMatrix matrix;
    double radius_used = 0.0;
    uint32_t rounds = 0;
    size_t revised_entries = 0;
};

/// Whole-range repair of saturated estimates. Entries at or below the
/// local-view radius are trusted verbatim; everything else is rebuilt as the
/// smallest chain sum over intermediaries, one breadth-first round at a
/// time, where a round may only use entries settled in earlier rounds.
/// Entries no chain reaches keep their original estimates.
inline ConsistenceResult distance_consistence(const DistanceMatrix& input,
                                              const ConsistenceOptions& options) {
    if (options.tolerance < 0.0)
        throw InputError("distance_consistence: negative tolerance");
    const size_t n = input.size();
    const Matrix& d = input.distances;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i; j < n; ++j) {
            if (d.at(i, j) != d.at(j, i))
                throw InputError("distance_consistence: matrix not symmetric");
            if (!(d.at(i, j) >= 0.0))
                throw InputError("distance_consistence: negative or NaN entry");
        }

    ConsistenceResult result;
    result.matrix = input;
    auto& out = result.matrix;
    std::fill(out.revision.begin(), out.revision.end(), 0u);

    double radius;
    if (options.known_local_radius) {
        radius = *options.known_local_radius;
    } else {
        const auto detected =
            detect_local_radius(d, options.tolerance, options.min_witnesses);
        if (!detected) return result;  // nothing verifiable; leave the matrix alone
        radius = *detected - options.radius_margin * options.tolerance;
    }
    result.radius_used = radius;

    std::vector<char> settled(n * n, 0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            if (i == j || d.at(i, j) <= radius) settled[i * n + j] = 1;

    const uint32_t max_rounds =
        options.max_rounds > 0 ? options.max_rounds : static_cast<uint32_t>(n);
    struct Update {
        size_t i, k;
        double value;
    };
    for (uint32_t round = 1; round <= max_rounds; ++round) {
        std::vector<Update> updates;
        for (size_t i = 0; i < n; ++i) {
            for (size_t k = i + 1; k < n; ++k) {
                if (settled[i * n + k]) continue;
                double best = std::numeric_limits<double>::infinity();
                for (size_t j = 0; j < n; ++j) {
                    if (j == i || j == k) continue;
                    if (!settled[i * n + j] || !settled[j * n + k]) continue;
                    if (out.revision[i * n + j] >= round || out.revision[j * n + k] >= round)
                        continue;
                    best = std::min(best, out.distances.at(i, j) + out.distances.at(j, k));
                }
                if (std::isfinite(best)) updates.push_back({i, k, best});
            }
        }
        if (updates.empty()) break;
        for (const auto& u : updates) {
            out.distances.set_symmetric(u.i, u.k, u.value);
            out.revision[u.i * n + u.k] = round;
            out.revision[u.k * n + u.i] = round;
            settled[u.i * n + u.k] = 1;
            settled[u.k * n + u.i] = 1;
        }
        result.revised_entries += updates.size();
        result.rounds = round;
    }
    return result;
}

/// Tolerance matched to the expected estimation jitter at confidence beta.
inline double default_consistence_tolerance(const EncodingConfig& config, Mechanism mechanism,
                                            double beta = 0.05) {
    return error_bound(config, beta, mechanism);
}

/// Mean absolute difference over off-diagonal pairs.
inline double average_estimation_error(const Matrix& truth, const Matrix& estimate) {
    if (truth.size() != estimate.size())
        throw InputError("average_estimation_error: shape mismatch");
    const size_t n = truth.size();
    if (n < 2) return 0.0;
    double total = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            total += std::abs(truth.at(i, j) - estimate.at(i, j));
            ++count;
        }
    return total / static_cast<double>(count);
}

// --- matrix serialization ----------------------------------------------------

inline void write_matrix_csv(const Matrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write matrix: " + path);
    out.precision(17);
    for (size_t i = 0; i < m.size(); ++i) {
        for (size_t j = 0; j < m.size(); ++j) {
            out << m.at(i, j);
            out << (j + 1 < m.size() ? "," : "");
        }
        out << "\n";
    }
}

inline Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open matrix: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
        rows.push_back(std::move(row));
    }
    Matrix m(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) throw InputError("matrix CSV is not square");
        for (size_t j = 0; j < rows[i].size(); ++j) m.set(i, j, rows[i][j]);
    }
    return m;
}

inline void write_matrix_binary(const Matrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write matrix: " + path);
    out.write("DMAT", 4);
    detail::put_u16(out, 1);
    detail::put_u64(out, m.size());
    for (double v : m.values()) detail::put_u64(out, std::bit_cast<uint64_t>(v));
}

inline Matrix read_matrix_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open matrix: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "DMAT") throw InputError("not a matrix file");
    if (detail::get_u16(in) != 1) throw InputError("unsupported matrix version");
    const uint64_t n = detail::get_u64(in);
    Matrix m(n);
    for (size_t i = 0; i < n * n; ++i)
        m.values()[i] = std::bit_cast<double>(detail::get_u64(in));
    if (!in) throw InputError("truncated matrix file");
    return m;
}

inline void write_revision_csv(const DistanceMatrix& dm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write revision flags: " + path);
    const size_t n = dm.size();
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            out << dm.revision[i * n + j];
            out << (j + 1 < n ? "," : "");
        }
        out << "\n";
    }
}

}  // namespace dpbv
