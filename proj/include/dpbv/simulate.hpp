// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dpbv/clustering.hpp"
#include "dpbv/multiparty.hpp"

namespace dpbv {

enum class SimulationTask { Distances, KCluster, Dbscan };

struct SimulationSpec {
    EncodingScheme scheme;
    Mechanism mechanism = Mechanism::DPBV;
    uint64_t noise_seed = 1;
    int parties = 2;
    PartitionKind partition = PartitionKind::Horizontal;
    VerticalMethod method = VerticalMethod::Naive;
    SimulationTask task = SimulationTask::Distances;
    bool run_consistence = false;
    std::optional<double> known_local_radius;
    int k = 2;
    int max_iterations = 100;
    int restarts = 1;
    uint64_t cluster_seed = 1;
    double eps = 1.0;
    int min_points = 5;
    unsigned workers = 1;
    std::string workdir = "simulation";
};

struct SimulationResult {
    DistanceMatrix matrix;
    std::optional<ClusterAssignment> assignment;
    std::optional<double> nmi_vs_truth;
    std::vector<std::string> party_dirs;
};

namespace detail {

// Pairwise decomposition payload: one header then fixed-size entries of
// (id_a, id_b, bits of S1, bits of S2).
inline void write_decomposition_stream(const Custodian& bob, const DecompositionScheme& dec,
                                       Mechanism mechanism, uint64_t noise_seed,
                                       uint64_t fingerprint, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write decomposition payload: " + path);
    const size_t n = bob.local.size();
    out.write("DPRS", 4);
    put_u16(out, 1);
    put_u16(out, 0);
    put_u32(out, dec.config.s);
    put_u64(out, n * (n - 1) / 2);
    put_u64(out, fingerprint);
    put_u64(out, std::bit_cast<uint64_t>(dec.mu_max));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const auto& ra = bob.local.records[i];
            const auto& rb = bob.local.records[j];
            SplitMix64 noise = derive_stream(noise_seed, stream::kPairNoise, ra.id, rb.id,
                                             static_cast<uint64_t>(bob.party_id));
            const DecompositionPair agg = decomposition_aggregates(ra.values, rb.values);
            const BitVector e1 = encode_value(agg.s1, dec.family, dec.config, mechanism, noise);
            const BitVector e2 = encode_value(agg.s2, dec.family, dec.config, mechanism, noise);
            put_u64(out, ra.id);
            put_u64(out, rb.id);
            for (const auto& vec : {e1, e2}) {
                const auto bytes = vec.to_bytes();
                out.write(reinterpret_cast<const char*>(bytes.data()),
                          static_cast<std::streamsize>(bytes.size()));
            }
        }
    }
}

struct DecompositionEntry {
    uint64_t id_a = 0, id_b = 0;
    BitVector s1, s2;
};

inline std::vector<DecompositionEntry> read_decomposition_stream(const std::string& path,
                                                                 uint64_t expect_fingerprint,
                                                                 double& mu_max_out,
                                                                 uint32_t& s_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open decomposition payload: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "DPRS") throw InputError("bad decomposition payload");
    if (get_u16(in) != 1) throw InputError("unsupported decomposition payload version");
    get_u16(in);
    s_out = get_u32(in);
    const uint64_t pairs = get_u64(in);
    const uint64_t fp = get_u64(in);
    if (fp != expect_fingerprint)
        throw InputError("config fingerprint mismatch in decomposition payload");
    mu_max_out = std::bit_cast<double>(get_u64(in));
    const size_t vec_bytes = (s_out + 7) / 8;
    std::vector<uint8_t> buf(vec_bytes);
    std::vector<DecompositionEntry> entries;
    entries.reserve(pairs);
    for (uint64_t p = 0; p < pairs; ++p) {
        DecompositionEntry e;
        e.id_a = get_u64(in);
        e.id_b = get_u64(in);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(vec_bytes));
        e.s1 = BitVector::from_bytes(s_out, buf.data(), buf.size());
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(vec_bytes));
        e.s2 = BitVector::from_bytes(s_out, buf.data(), buf.size());
        if (!in) throw InputError("truncated decomposition payload");
        entries.push_back(std::move(e));
    }
    return entries;
}

inline void write_party_manifest(const Custodian& c, uint64_t fingerprint,
                                 const std::string& payload_file, const std::string& path) {
    nlohmann::json j;
    j["party_id"] = c.party_id;
    j["partition"] = partition_name(c.kind);
    j["record_count"] = c.local.size();
    if (c.kind == PartitionKind::Vertical) {
        j["attr_begin"] = c.attr_begin;
        j["attr_end"] = c.attr_end;
    }
    char fp[32];
    std::snprintf(fp, sizeof(fp), "%016llx", static_cast<unsigned long long>(fingerprint));
    j["config_fingerprint"] = fp;
    j["payload"] = payload_file;
    std::ofstream out(path);
    if (!out) throw InputError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace detail

/// Run the full multi-party pipeline. Every custodian encodes locally and
/// writes its payload to disk; the aggregator only ever reads those files
/// (plus, vertically, the querier's exact partial squared distances), so the
/// serialized formats are the interface. Ground-truth labels never enter the
/// aggregation; they are only compared against the final labels.
inline SimulationResult simulate(const Dataset& data, const SimulationSpec& spec) {
    namespace fs = std::filesystem;
    spec.scheme.validate();
    const uint64_t fingerprint = spec.scheme.fingerprint();
    fs::create_directories(spec.workdir);

    SimulationResult result;
    std::vector<std::string> encoded_paths;
    std::vector<std::string> decomposition_paths;
    std::string lsq_path;

    const auto custodians = spec.partition == PartitionKind::Horizontal
                                ? partition_horizontal(data, spec.parties)
                                : partition_vertical(data, spec.parties);

    // --- custodian side: encode locally, write payloads ---
    for (const auto& c : custodians) {
        const fs::path dir = fs::path(spec.workdir) / ("party_" + std::to_string(c.party_id));
        fs::create_directories(dir);
        result.party_dirs.push_back(dir.string());
        std::string payload;
        if (c.kind == PartitionKind::Horizontal) {
            EncodingScheme local_scheme = spec.scheme;
            const auto enc = encode_dataset(c.local, local_scheme, spec.mechanism, spec.noise_seed);
            payload = (dir / "encoded.bin").string();
            write_encoded(enc, payload);
            encoded_paths.push_back(payload);
        } else if (c.party_id == 0) {
            // The querier's own attributes contribute exactly.
            Matrix lsq(c.local.size(), 0.0);
            for (size_t i = 0; i < c.local.size(); ++i)
                for (size_t j = i + 1; j < c.local.size(); ++j) {
                    double sum = 0.0;
                    for (size_t a = 0; a < c.local.records[i].values.size(); ++a) {
                        const double diff =
                            c.local.records[i].values[a] - c.local.records[j].values[a];
                        sum += diff * diff;
                    }
                    lsq.set_symmetric(i, j, sum);
                }
            payload = (dir / "partial_sq.bin").string();
            write_matrix_binary(lsq, payload);
            lsq_path = payload;
        } else if (spec.method == VerticalMethod::Naive) {
            const auto enc = encode_dataset_slice(c.local, spec.scheme, c.attr_begin, c.attr_end,
                                                  spec.mechanism, spec.noise_seed);
            payload = (dir / "encoded.bin").string();
            write_encoded(enc, payload);
            encoded_paths.push_back(payload);
        } else {
            const auto dec = make_decomposition_scheme(spec.scheme, c.attr_begin, c.attr_end);
            payload = (dir / "pairs.bin").string();
            detail::write_decomposition_stream(c, dec, spec.mechanism, spec.noise_seed,
                                               fingerprint, payload);
            decomposition_paths.push_back(payload);
        }
        detail::write_party_manifest(c, fingerprint, payload, (dir / "manifest.json").string());
    }

    // --- aggregator side: consolidate payloads into a distance matrix ---
    if (spec.partition == PartitionKind::Horizontal) {
        std::vector<EncodedRecord> all;
        std::optional<Mechanism> mech;
        for (const auto& path : encoded_paths) {
            auto enc = read_encoded(path);
            if (enc.config_fingerprint != fingerprint)
                throw InputError("config fingerprint mismatch between parties");
            if (mech && *mech != enc.mechanism)
                throw InputError("mechanism mismatch between parties");
            mech = enc.mechanism;
            for (auto& rec : enc.records) all.push_back(std::move(rec));
        }
        std::sort(all.begin(), all.end(),
                  [](const EncodedRecord& a, const EncodedRecord& b) { return a.id < b.id; });
        EncodedDataset merged;
        merged.mechanism = *mech;
        merged.config_fingerprint = fingerprint;
        merged.s = spec.scheme.base.s;
        merged.dim = spec.scheme.dim();
        merged.records = std::move(all);
        result.matrix = build_distance_matrix(merged, spec.scheme, spec.workers);
    } else {
        const Matrix lsq = read_matrix_binary(lsq_path);
        const size_t n = lsq.size();
        Matrix r2(n, 0.0);
        if (spec.method == VerticalMethod::Naive) {
            for (size_t pi = 0; pi < encoded_paths.size(); ++pi) {
                auto enc = read_encoded(encoded_paths[pi]);
                const auto& party = custodians[pi + 1];
                if (enc.config_fingerprint != fingerprint)
                    throw InputError("config fingerprint mismatch between parties");
                for (size_t i = 0; i < n; ++i)
                    for (size_t j = i + 1; j < n; ++j) {
                        const double contrib = vertical_naive_r2(
                            enc.records[i], enc.records[j], spec.scheme, enc.mechanism,
                            party.attr_begin, party.attr_end);
                        r2.set_symmetric(i, j, r2.at(i, j) + contrib);
                    }
            }
        } else {
            for (const auto& path : decomposition_paths) {
                double mu_max = 0.0;
                uint32_t s = 0;
                const auto entries = detail::read_decomposition_stream(path, fingerprint, mu_max, s);
                EncodingConfig dec_config = spec.scheme.base;
                dec_config.lower = 0.0;
                dec_config.upper = mu_max;
                dec_config.t = mu_max / 2.0;
                dec_config.attribute_count = 1;
                std::unordered_map<uint64_t, size_t> rows;
                for (size_t i = 0; i < n; ++i) rows[data.records[i].id] = i;
                auto row_of = [&](uint64_t id) {
                    const auto it = rows.find(id);
                    if (it == rows.end())
                        throw InputError("decomposition payload references unknown record id");
                    return it->second;
                };
                for (const auto& e : entries) {
                    const double h = hamming_distance(e.s1, e.s2);
                    const double raw = estimate_raw(h, dec_config, spec.mechanism);
                    const size_t i = row_of(e.id_a);
                    const size_t j = row_of(e.id_b);
                    r2.set_symmetric(i, j, r2.at(i, j) + raw);
                }
            }
        }
        Matrix combined(n, 0.0);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j)
                combined.set_symmetric(i, j, std::sqrt(lsq.at(i, j) + std::max(0.0, r2.at(i, j))));
        result.matrix = DistanceMatrix::from(std::move(combined));
    }

    if (spec.run_consistence) {
        ConsistenceOptions opts;
        opts.tolerance = default_consistence_tolerance(spec.scheme.base, spec.mechanism);
        opts.known_local_radius = spec.known_local_radius;
        result.matrix = distance_consistence(result.matrix, opts).matrix;
    }

    // --- analysis + evaluation ---
    if (spec.task == SimulationTask::KCluster) {
        result.assignment = kcluster(result.matrix.distances, spec.k, spec.max_iterations,
                                     spec.cluster_seed, spec.restarts);
    } else if (spec.task == SimulationTask::Dbscan) {
        result.assignment = dbscan(result.matrix.distances, spec.eps, spec.min_points);
    }
    if (result.assignment && data.has_labels())
        result.nmi_vs_truth = nmi(data.labels(), result.assignment->labels);
    return result;
}

}  // namespace dpbv
