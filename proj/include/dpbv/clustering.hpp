// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "dpbv/dataset.hpp"
#include "dpbv/distance.hpp"
#include "dpbv/rng.hpp"

namespace dpbv {

struct ClusterAssignment {
    std::vector<int> labels;      // -1 marks density-clustering noise
    int k = 0;
    int iterations_used = 0;
    bool converged = false;
};

/// Mean pairwise distance between a point and a cluster's members, evaluated
/// on whatever matrix the caller supplies (raw entries keep the average
/// unbiased; a constant offset shifts every cluster equally).
inline double point_to_cluster_distance(size_t point, const std::vector<size_t>& members,
                                        const Matrix& distances) {
    if (members.empty()) throw InputError("point_to_cluster_distance: empty cluster");
    double sum = 0.0;
    for (size_t m : members) sum += distances.at(point, m);
    return sum / static_cast<double>(members.size());
}

/// Sum over clusters of member-to-own-cluster average distances.
inline double kcluster_objective(const Matrix& distances, const std::vector<int>& labels, int k) {
    const size_t n = distances.size();
    std::vector<std::vector<size_t>> members(k);
    for (size_t i = 0; i < n; ++i)
        if (labels[i] >= 0) members[labels[i]].push_back(i);
    double total = 0.0;
    for (int c = 0; c < k; ++c) {
        if (members[c].empty()) continue;
        for (size_t p : members[c]) total += point_to_cluster_distance(p, members[c], distances);
    }
    return total;
}

namespace detail {

inline std::vector<size_t> sample_distinct(size_t n, size_t k, SplitMix64& rng) {
    std::vector<size_t> pool(n);
    for (size_t i = 0; i < n; ++i) pool[i] = i;
    for (size_t i = 0; i < k; ++i) {
        const size_t j = i + static_cast<size_t>(rng.next_below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

inline ClusterAssignment kcluster_single(const Matrix& distances, int k, int max_iterations,
                                         SplitMix64 rng) {
    const size_t n = distances.size();
    ClusterAssignment result;
    result.k = k;
    result.labels.assign(n, 0);

    // Seed clusters with k distinct records, then assign everyone to the
    // nearest seed. Ties break toward the lowest cluster index.
    const auto seeds = sample_distinct(n, static_cast<size_t>(k), rng);
    for (size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (int c = 0; c < k; ++c) {
            const double d = distances.at(i, seeds[c]);
            if (d < best) {
                best = d;
                best_c = c;
            }
        }
        result.labels[i] = best_c;
    }

    std::vector<double> cluster_sum(k);
    std::vector<size_t> cluster_count(k);
    std::vector<uint64_t> history;
    for (int iter = 1; iter <= max_iterations; ++iter) {
        const std::vector<int> previous = result.labels;
        std::vector<int> next(n);
        // previous-iteration membership counts once, then one row sweep per point
        std::vector<std::vector<size_t>> members(k);
        for (size_t i = 0; i < n; ++i) members[previous[i]].push_back(i);

        for (size_t i = 0; i < n; ++i) {
            std::fill(cluster_sum.begin(), cluster_sum.end(), 0.0);
            std::fill(cluster_count.begin(), cluster_count.end(), 0);
            for (size_t j = 0; j < n; ++j) {
                cluster_sum[previous[j]] += distances.at(i, j);
                ++cluster_count[previous[j]];
            }
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (int c = 0; c < k; ++c) {
                if (cluster_count[c] == 0) continue;
                const double d = cluster_sum[c] / static_cast<double>(cluster_count[c]);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            next[i] = best_c;
        }

        // A cluster emptied by reassignment is reseeded with the point
        // farthest from its newly assigned cluster.
        for (int c = 0; c < k; ++c) {
            if (std::count(next.begin(), next.end(), c) > 0) continue;
            double worst = -1.0;
            size_t fugitive = 0;
            for (size_t i = 0; i < n; ++i) {
                if (std::count(next.begin(), next.end(), next[i]) <= 1) continue;
                const auto& own = members[next[i]];
                const double d = own.empty() ? 0.0 : point_to_cluster_distance(i, own, distances);
                if (d > worst) {
                    worst = d;
                    fugitive = i;
                }
            }
            next[fugitive] = c;
        }

        result.iterations_used = iter;
        if (next == previous) {
            result.converged = true;
            break;
        }
        // Noisy distances can cycle between assignments; a revisited state
        // will never escape, so stop there.
        uint64_t digest = 0x9e3779b97f4a7c15ULL;
        for (int lbl : next) digest = SplitMix64::hash(digest, static_cast<uint64_t>(lbl));
        result.labels = next;
        if (std::find(history.begin(), history.end(), digest) != history.end()) break;
        history.push_back(digest);
    }
    return result;
}

}  // namespace detail

/// Iterative clustering that only needs pairwise distances: each pass moves
/// every point to the cluster minimizing its average member distance, until
/// assignments stop changing. With restarts > 1 the run with the smallest
/// objective wins (seeds derived from seed + restart index).
inline ClusterAssignment kcluster(const Matrix& distances, int k, int max_iterations,
                                  uint64_t seed, int restarts = 1) {
    const size_t n = distances.size();
    if (k < 1) throw InputError("kcluster: k must be at least 1");
    if (static_cast<size_t>(k) > n) throw InputError("kcluster: k exceeds dataset size");
    if (max_iterations < 1) throw InputError("kcluster: max_iterations must be positive");
    ClusterAssignment best;
    double best_objective = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        auto run = detail::kcluster_single(distances, k, max_iterations,
                                           derive_stream(seed, stream::kClusterInit, r));
        const double obj = kcluster_objective(distances, run.labels, k);
        if (obj < best_objective) {
            best_objective = obj;
            best = std::move(run);
        }
    }
    return best;
}

/// Density clustering on a distance matrix. A point is core when at least
/// min_points points (itself included) lie within eps; border points join
/// the first core cluster that reaches them; the rest are noise (-1).
inline ClusterAssignment dbscan(const Matrix& distances, double eps, int min_points) {
    if (eps < 0.0) throw InputError("dbscan: eps must be non-negative");
    if (min_points < 1) throw InputError("dbscan: min_points must be positive");
    const size_t n = distances.size();
    ClusterAssignment result;
    result.labels.assign(n, -1);
    result.converged = true;
    std::vector<char> visited(n, 0);

    auto neighbors_of = [&](size_t i) {
        std::vector<size_t> nb;
        for (size_t j = 0; j < n; ++j)
            if (distances.at(i, j) <= eps) nb.push_back(j);
        return nb;
    };

    int cluster = 0;
    for (size_t i = 0; i < n; ++i) {
        if (visited[i]) continue;
        visited[i] = 1;
        auto nb = neighbors_of(i);
        if (nb.size() < static_cast<size_t>(min_points)) continue;  // stays noise unless reached
        result.labels[i] = cluster;
        std::vector<size_t> frontier(nb.begin(), nb.end());
        for (size_t idx = 0; idx < frontier.size(); ++idx) {
            const size_t p = frontier[idx];
            if (result.labels[p] == -1) result.labels[p] = cluster;
            if (visited[p]) continue;
            visited[p] = 1;
            auto pnb = neighbors_of(p);
            if (pnb.size() >= static_cast<size_t>(min_points))
                frontier.insert(frontier.end(), pnb.begin(), pnb.end());
        }
        ++cluster;
    }
    result.k = cluster;
    result.iterations_used = 1;
    return result;
}

/// Hamming-space neighborhood threshold equivalent to a Euclidean eps: the
/// expected encoded distance at eps, from the disagreement-probability curve.
inline double dbscan_hamming_threshold(double eps, const EncodingConfig& config,
                                       Mechanism mechanism) {
    if (!(eps >= 0.0 && eps <= config.local_view()))
        throw InputError("dbscan threshold: eps outside the local view");
    return expected_hamming(eps, config, mechanism);
}

/// Density clustering for one-attribute encoded data applying the threshold
/// directly to Hamming distances, no decoded matrix needed.
inline ClusterAssignment dbscan_hamming(const EncodedDataset& enc, const EncodingScheme& scheme,
                                        double eps, int min_points) {
    if (enc.dim != 1) throw InputError("dbscan_hamming: requires one attribute");
    const double threshold = dbscan_hamming_threshold(eps, scheme.attribute_config(0),
                                                      enc.mechanism);
    const size_t n = enc.size();
    Matrix hamming(n, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            const double h = hamming_distance(enc.records[i].vectors[0], enc.records[j].vectors[0]);
            hamming.set_symmetric(i, j, h);
        }
    return dbscan(hamming, threshold, min_points);
}

/// Normalized mutual information in [0, 1] with sqrt(H_a * H_b)
/// normalization. Noise labels (-1) count as a cluster of their own. Two
/// zero-entropy labelings score 1, a single zero-entropy side scores 0.
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw InputError("nmi: length mismatch");
    if (a.empty()) throw InputError("nmi: empty input");
    const double n = static_cast<double>(a.size());
    std::map<int, double> count_a, count_b;
    std::map<std::pair<int, int>, double> joint;
    for (size_t i = 0; i < a.size(); ++i) {
        count_a[a[i]] += 1.0;
        count_b[b[i]] += 1.0;
        joint[{a[i], b[i]}] += 1.0;
    }
    double h_a = 0.0, h_b = 0.0, mi = 0.0;
    for (const auto& [label, c] : count_a) h_a -= c / n * std::log(c / n);
    for (const auto& [label, c] : count_b) h_b -= c / n * std::log(c / n);
    for (const auto& [pair, c] : joint) {
        const double pxy = c / n;
        const double px = count_a[pair.first] / n;
        const double py = count_b[pair.second] / n;
        mi += pxy * std::log(pxy / (px * py));
    }
    if (h_a <= 0.0 && h_b <= 0.0) return 1.0;
    if (h_a <= 0.0 || h_b <= 0.0) return 0.0;
    return std::max(0.0, std::min(1.0, mi / std::sqrt(h_a * h_b)));
}

// --- baselines ---------------------------------------------------------------

/// Plain Lloyd k-means on raw coordinates; the non-private baseline.
inline ClusterAssignment kmeans(const Dataset& data, int k, int max_iterations, uint64_t seed,
                                int restarts = 1) {
    const size_t n = data.size();
    const size_t d = data.dim();
    if (k < 1 || static_cast<size_t>(k) > n) throw InputError("kmeans: bad k");
    ClusterAssignment best;
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        SplitMix64 rng = derive_stream(seed, stream::kClusterInit, r);
        auto seeds = detail::sample_distinct(n, static_cast<size_t>(k), rng);
        std::vector<std::vector<double>> centers(k);
        for (int c = 0; c < k; ++c) centers[c] = data.records[seeds[c]].values;
        ClusterAssignment run;
        run.k = k;
        run.labels.assign(n, 0);
        for (int iter = 1; iter <= max_iterations; ++iter) {
            bool changed = false;
            for (size_t i = 0; i < n; ++i) {
                double bd = std::numeric_limits<double>::infinity();
                int bc = 0;
                for (int c = 0; c < k; ++c) {
                    double sum = 0.0;
                    for (size_t a = 0; a < d; ++a) {
                        const double diff = data.records[i].values[a] - centers[c][a];
                        sum += diff * diff;
                    }
                    if (sum < bd) {
                        bd = sum;
                        bc = c;
                    }
                }
                if (run.labels[i] != bc) changed = true;
                run.labels[i] = bc;
            }
            run.iterations_used = iter;
            if (!changed) {
                run.converged = true;
                break;
            }
            for (int c = 0; c < k; ++c) {
                std::vector<double> mean(d, 0.0);
                size_t count = 0;
                for (size_t i = 0; i < n; ++i)
                    if (run.labels[i] == c) {
                        for (size_t a = 0; a < d; ++a) mean[a] += data.records[i].values[a];
                        ++count;
                    }
                if (count > 0) {
                    for (size_t a = 0; a < d; ++a) mean[a] /= static_cast<double>(count);
                    centers[c] = std::move(mean);
                }
            }
        }
        double inertia = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const auto& ctr = centers[run.labels[i]];
            for (size_t a = 0; a < d; ++a) {
                const double diff = data.records[i].values[a] - ctr[a];
                inertia += diff * diff;
            }
        }
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best = std::move(run);
        }
    }
    return best;
}

/// Additive perturbation baseline: i.i.d. zero-mean Gaussian noise of scale
/// sigma added to every entry.
inline Dataset adp_transform(const Dataset& data, double sigma, uint64_t seed) {
    if (!(sigma > 0.0)) throw InputError("adp_transform: sigma must be positive");
    Dataset out = data;
    SplitMix64 rng = derive_stream(seed, stream::kBaseline, 0xadf);
    for (auto& rec : out.records)
        for (auto& v : rec.values) v += sigma * rng.next_gaussian();
    return out;
}

/// Random-projection baseline: project d-dimensional records to q dimensions
/// with a Gaussian matrix, scaled so squared distances are preserved in
/// expectation.
inline Dataset rsp_transform(const Dataset& data, uint32_t q, double sigma_r, uint64_t seed) {
    const uint32_t d = data.dim();
    if (q < 1 || q > d) throw InputError("rsp_transform: q must be in [1, d]");
    if (!(sigma_r > 0.0)) throw InputError("rsp_transform: sigma must be positive");
    SplitMix64 rng = derive_stream(seed, stream::kBaseline, 0x125);
    std::vector<double> projection(static_cast<size_t>(d) * q);
    for (auto& v : projection) v = sigma_r * rng.next_gaussian();
    Dataset out;
    out.attribute_names.reserve(q);
    for (uint32_t j = 0; j < q; ++j) out.attribute_names.push_back("proj" + std::to_string(j));
    const double scale = 1.0 / (std::sqrt(static_cast<double>(q)) * sigma_r);
    out.records.reserve(data.size());
    for (const auto& rec : data.records) {
        Record pr;
        pr.id = rec.id;
        pr.label = rec.label;
        pr.values.assign(q, 0.0);
        for (uint32_t j = 0; j < q; ++j) {
            double sum = 0.0;
            for (uint32_t a = 0; a < d; ++a) sum += rec.values[a] * projection[a * q + j];
            pr.values[j] = scale * sum;
        }
        out.records.push_back(std::move(pr));
    }
    return out;
}

}  // namespace dpbv
