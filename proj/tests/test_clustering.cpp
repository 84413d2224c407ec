// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "dpbv/clustering.hpp"
#include "dpbv/distance.hpp"
#include "dpbv/encoder.hpp"
#include "dpbv/synthetic.hpp"

using namespace dpbv;

namespace {
EncodingConfig demo_config(uint32_t s = 1000, double epsilon = 2.0) {
    EncodingConfig c;
    c.lower = 0.0;
    c.upper = 50.0;
    c.t = 25.0;
    c.s = s;
    c.epsilon = epsilon;
    c.seed = 42;
    return c;
}
}  // namespace

TEST_CASE("point-to-cluster distance is the plain member average") {
    Matrix m(3, 0.0);
    m.set_symmetric(0, 1, 2.0);
    m.set_symmetric(0, 2, 4.0);
    m.set_symmetric(1, 2, 1.0);
    CHECK(point_to_cluster_distance(0, {1}, m) == 2.0);               // singleton
    CHECK(point_to_cluster_distance(0, {1, 2}, m) == Catch::Approx(3.0));
    CHECK(point_to_cluster_distance(0, {0}, m) == 0.0);               // self, zero diagonal
    CHECK_THROWS_AS(point_to_cluster_distance(0, {}, m), InputError);
}

TEST_CASE("k=1 collapses to a single converged cluster") {
    const auto data = make_uniform(20, 2, 0.0, 50.0, 3);
    const auto m = exact_distance_matrix(data);
    const auto result = kcluster(m, 1, 100, 5);
    CHECK(result.converged);
    CHECK(result.iterations_used == 1);
    for (int lbl : result.labels) CHECK(lbl == 0);
}

TEST_CASE("two separated blobs are the optimum and are recovered exactly") {
    const auto data = make_blobs({{5.0}, {45.0}}, 100, 1.0, 71);
    const auto m = exact_distance_matrix(data);
    const auto truth = data.labels();

    // the blob split is a fixed point: everyone is closer to their own blob
    std::vector<size_t> blob_a, blob_b;
    for (size_t i = 0; i < data.size(); ++i)
        (truth[i] == 0 ? blob_a : blob_b).push_back(i);
    for (size_t i = 0; i < data.size(); ++i) {
        const double own = point_to_cluster_distance(i, truth[i] == 0 ? blob_a : blob_b, m);
        const double other = point_to_cluster_distance(i, truth[i] == 0 ? blob_b : blob_a, m);
        REQUIRE(own < other);
    }

    // and no single-point move or random split improves the objective
    const double opt = kcluster_objective(m, truth, 2);
    for (size_t i = 0; i < data.size(); ++i) {
        auto moved = truth;
        moved[i] = 1 - moved[i];
        CHECK(kcluster_objective(m, moved, 2) > opt);
    }
    SplitMix64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> random_labels(data.size());
        for (auto& lbl : random_labels) lbl = static_cast<int>(rng.next_below(2));
        if (random_labels == truth) continue;
        CHECK(kcluster_objective(m, random_labels, 2) >= opt);
    }

    const auto result = kcluster(m, 2, 100, 5);
    CHECK(result.converged);
    CHECK(nmi(truth, result.labels) == Catch::Approx(1.0));
}

TEST_CASE("assignments are deterministic and offset-invariant") {
    const auto data = make_blobs({{10.0, 10.0}, {40.0, 40.0}, {10.0, 40.0}}, 30, 2.0, 13);
    const auto m = exact_distance_matrix(data);
    const auto a = kcluster(m, 3, 100, 17);
    const auto b = kcluster(m, 3, 100, 17);
    CHECK(a.labels == b.labels);

    // a constant shift of every entry cannot change any argmin
    Matrix shifted = m;
    for (auto& v : shifted.values()) v += 7.3;
    const auto c = kcluster(shifted, 3, 100, 17);
    CHECK(c.labels == a.labels);
}

TEST_CASE("objective never increases over exact-distance iterations") {
    const auto data = make_blobs({{10.0, 10.0}, {40.0, 40.0}}, 40, 4.0, 29);
    const auto m = exact_distance_matrix(data);
    double prev = std::numeric_limits<double>::infinity();
    for (int cap = 1; cap <= 12; ++cap) {
        const auto run = kcluster(m, 2, cap, 31);
        const double obj = kcluster_objective(m, run.labels, 2);
        CHECK(obj <= prev + 1e-9);
        prev = obj;
        if (run.converged) break;
    }
}

TEST_CASE("emptied clusters are reseeded with far points") {
    // two tight pairs plus k=3: one seed inevitably loses its members
    Dataset data;
    data.attribute_names = {"x"};
    const std::vector<double> xs = {0.0, 0.1, 0.2, 49.8, 49.9, 50.0};
    for (size_t i = 0; i < xs.size(); ++i)
        data.records.push_back({i, {xs[i]}, std::nullopt});
    const auto m = exact_distance_matrix(data);
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const auto result = kcluster(m, 3, 50, seed);
        std::set<int> used(result.labels.begin(), result.labels.end());
        CHECK(used.size() == 3);  // nobody left empty
        for (int lbl : result.labels) {
            CHECK(lbl >= 0);
            CHECK(lbl < 3);
        }
    }
}

TEST_CASE("kcluster argument validation") {
    Matrix m(3, 0.0);
    CHECK_THROWS_AS(kcluster(m, 0, 10, 1), InputError);
    CHECK_THROWS_AS(kcluster(m, 4, 10, 1), InputError);
}

TEST_CASE("density clustering separates blobs and flags stray points") {
    auto data = make_blobs({{10.0, 10.0}, {40.0, 40.0}}, 60, 1.0, 37);
    // a handful of isolated points far from both blobs
    const std::vector<std::vector<double>> strays = {{25.0, 3.0}, {3.0, 25.0}, {47.0, 3.0}};
    for (const auto& s : strays)
        data.records.push_back({data.records.size(), {s[0], s[1]}, 2});
    const auto m = exact_distance_matrix(data);
    const auto result = dbscan(m, 2.0, 5);
    REQUIRE(result.k == 2);
    // each blob lands in one cluster (a few fringe points may stay noise,
    // never the other blob's cluster); the strays stay noise
    for (int blob = 0; blob < 2; ++blob) {
        std::map<int, int> counts;
        for (size_t i = 60 * blob; i < 60 * (blob + 1u); ++i) ++counts[result.labels[i]];
        CHECK(counts[blob] >= 54);
        for (const auto& [lbl, cnt] : counts) CHECK((lbl == blob || lbl == -1));
    }
    for (size_t i = 120; i < data.size(); ++i) CHECK(result.labels[i] == -1);
}

TEST_CASE("hamming threshold at eps=0 is the zero-distance expectation") {
    const auto c = demo_config(1000, 2.0);
    const double e = std::exp(2.0);
    CHECK(dbscan_hamming_threshold(0.0, c, Mechanism::DPBV) ==
          Catch::Approx(2.0 * c.s * e / ((e + 1.0) * (e + 1.0))));
    CHECK(dbscan_hamming_threshold(0.0, c, Mechanism::BV) == 0.0);
    CHECK_THROWS_AS(dbscan_hamming_threshold(51.0, c, Mechanism::DPBV), InputError);
}

TEST_CASE("matrix-mode and threshold-mode density clustering agree noiselessly") {
    const auto config = demo_config(800, 2.0);
    const auto scheme = uniform_scheme(config, 1);
    auto data = make_blobs({{12.0}, {38.0}}, 40, 1.0, 41);
    data = apply_range_policy(data, scheme, RangePolicy::Clamp);
    const auto enc = encode_dataset(data, scheme, Mechanism::BV, 9);
    const double eps = 3.1415;  // off any decoding grid boundary
    const auto via_matrix = dbscan(build_distance_matrix(enc, scheme).distances, eps, 4);
    const auto via_threshold = dbscan_hamming(enc, scheme, eps, 4);
    CHECK(via_matrix.labels == via_threshold.labels);
}

TEST_CASE("anonymized density clustering tracks the exact run") {
    const auto config = demo_config(1000, 2.0);
    const auto scheme = uniform_scheme(config, 2);
    auto data = make_blobs({{12.0, 12.0}, {38.0, 38.0}}, 45, 1.2, 53);
    data = apply_range_policy(data, scheme, RangePolicy::Clamp);
    const auto exact_labels = dbscan(exact_distance_matrix(data), 3.0, 5);
    const auto enc = encode_dataset(data, scheme, Mechanism::DPBV, 15);
    const auto noisy_labels = dbscan(build_distance_matrix(enc, scheme).distances, 3.0, 5);
    CHECK(nmi(exact_labels.labels, noisy_labels.labels) >= 0.9);
}

TEST_CASE("normalized mutual information conventions") {
    CHECK(nmi({0, 0, 1, 1}, {0, 0, 1, 1}) == Catch::Approx(1.0));
    CHECK(nmi({0, 0, 1, 1}, {1, 1, 0, 0}) == Catch::Approx(1.0));  // label names are arbitrary
    CHECK(nmi({0, 0, 1, 1}, {2, 2, 2, 2}) == 0.0);                 // constant labeling
    CHECK(nmi({0, 0, 0, 0}, {1, 1, 1, 1}) == 1.0);                 // both trivial partitions
    CHECK_THROWS_AS(nmi({0, 1}, {0, 1, 2}), InputError);
    CHECK_THROWS_AS(nmi({}, {}), InputError);

    // independent labelings score near zero
    SplitMix64 rng(61);
    std::vector<int> a(4000), b(4000);
    for (size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<int>(rng.next_below(4));
        b[i] = static_cast<int>(rng.next_below(4));
    }
    CHECK(nmi(a, b) < 0.02);
}

TEST_CASE("additive perturbation with vanishing scale is the identity in the limit") {
    const auto data = make_uniform(50, 4, 0.0, 50.0, 23);
    const auto noisy = adp_transform(data, 1e-9, 7);
    double worst = 0.0;
    for (size_t i = 0; i < data.size(); ++i)
        for (size_t a = 0; a < 4; ++a)
            worst = std::max(worst,
                             std::abs(noisy.records[i].values[a] - data.records[i].values[a]));
    CHECK(worst < 1e-6);
    CHECK_THROWS_AS(adp_transform(data, 0.0, 7), InputError);
}

TEST_CASE("random projection preserves pairwise distances statistically") {
    const auto data = make_uniform(60, 64, 0.0, 50.0, 47);
    const auto projected = rsp_transform(data, 64, 1.0, 11);
    REQUIRE(projected.dim() == 64);
    const auto before = exact_distance_matrix(data);
    const auto after = exact_distance_matrix(projected);
    double ratio_sum = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < data.size(); ++i)
        for (size_t j = i + 1; j < data.size(); ++j) {
            const double orig = before.at(i, j);
            if (orig <= 0.0) continue;
            const double r = after.at(i, j) / orig;
            ratio_sum += r * r;
            ++count;
        }
    const double mean_sq_ratio = ratio_sum / static_cast<double>(count);
    CHECK(mean_sq_ratio == Catch::Approx(1.0).margin(0.1));
    CHECK_THROWS_AS(rsp_transform(data, 0, 1.0, 11), InputError);
    CHECK_THROWS_AS(rsp_transform(data, 65, 1.0, 11), InputError);
}

TEST_CASE("plain k-means recovers separated blobs") {
    const auto data = make_blobs({{5.0, 5.0}, {45.0, 45.0}, {5.0, 45.0}}, 50, 1.5, 83);
    const auto result = kmeans(data, 3, 100, 3, 3);
    CHECK(result.converged);
    CHECK(nmi(data.labels(), result.labels) == Catch::Approx(1.0));
}
