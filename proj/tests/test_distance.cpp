// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "dpbv/distance.hpp"
#include "dpbv/encoder.hpp"
#include "dpbv/synthetic.hpp"

using namespace dpbv;

namespace {
EncodingConfig make_config(double lower, double upper, double t, uint32_t s, double eps = 2.0,
                           uint64_t seed = 42) {
    EncodingConfig c;
    c.lower = lower;
    c.upper = upper;
    c.t = t;
    c.s = s;
    c.epsilon = eps;
    c.seed = seed;
    return c;
}
}  // namespace

TEST_CASE("hamming distance on small patterns") {
    BitVector a(4), b(4);
    // 1011 vs 1101 (bit 0 = leftmost here)
    a.set_bit(0, true); a.set_bit(2, true); a.set_bit(3, true);
    b.set_bit(0, true); b.set_bit(1, true); b.set_bit(3, true);
    CHECK(hamming_distance(a, b) == 2);
    CHECK(hamming_distance(a, a) == 0);
    CHECK(hamming_distance(a, a.complemented()) == 4);
}

TEST_CASE("noiseless estimate is mu*dH/(2s)") {
    const auto c = make_config(0.0, 10.0, 5.0, 1000);
    CHECK(bv_estimate(0.0, c) == 0.0);
    const auto c2 = make_config(0.0, 16.0, 2.0, 1000);  // mu = 20
    CHECK(bv_estimate(240.0, c2) == Catch::Approx(2.4));
}

TEST_CASE("estimates saturate beyond the local view") {
    // points 4 apart with a 2.4-wide view: the decoded value hugs 2t, far
    // below the true distance, until the consistence pass repairs it
    const auto c = make_config(0.0, 20.0, 1.2, 1000);
    const auto fam = derive_hash_family(c, 0);
    const double est =
        bv_estimate(hamming_distance(bv_encode(5.0, fam, c), bv_encode(9.0, fam, c)), c);
    const double p = 4.0 * c.t / c.mu();
    const double sigma = c.mu() / (2.0 * c.s) * std::sqrt(c.s * p * (1 - p));
    CHECK(std::abs(est - c.local_view()) <= 4.0 * sigma);
    CHECK(est < 3.0);  // nowhere near the true 4
}

TEST_CASE("noisy estimator offset and clamping") {
    const auto c = make_config(0.0, 50.0, 25.0, 1000, 2.0);
    const double e = std::exp(2.0);

    SECTION("zero-distance expected hamming maps to exactly zero") {
        const double fixed_point = 2.0 * c.s * e / ((e + 1.0) * (e + 1.0));
        CHECK(dpbv_estimate_raw(fixed_point, c) == Catch::Approx(0.0).margin(1e-9));
    }
    SECTION("raw value at dH = 0 is minus the offset") {
        // independent arithmetic route for the offset mu*e^eps/(e^eps-1)^2
        const double offset = 100.0 * e / (std::expm1(2.0) * std::expm1(2.0));
        CHECK(offset == Catch::Approx(18.1015).margin(5e-4));
        CHECK(dpbv_estimate_raw(0.0, c) == Catch::Approx(-offset).margin(1e-9));
        CHECK(dpbv_estimate(0.0, c) == 0.0);
    }
    SECTION("estimator inverts the expected hamming curve exactly") {
        for (int i = 0; i <= 10; ++i) {
            const double d = c.local_view() * i / 10.0;
            const double inverted = dpbv_estimate_raw(expected_hamming(d, c, Mechanism::DPBV), c);
            CHECK(inverted == Catch::Approx(d).margin(1e-9));
            CHECK(dpbv_estimate(expected_hamming(d, c, Mechanism::DPBV), c) ==
                  Catch::Approx(d).margin(1e-9));
        }
    }
    SECTION("epsilon zero is rejected") {
        auto bad = c;
        bad.epsilon = 0.0;
        CHECK_THROWS_AS(dpbv_estimate_raw(10.0, bad), ConfigError);
    }
}

TEST_CASE("raw estimator is unbiased within the local view") {
    const auto base = make_config(0.0, 50.0, 25.0, 1000, 2.0);
    const int trials = 2000;
    for (double d : {10.0, 40.0}) {
        const double p = bit_disagreement_probability(d, base, Mechanism::DPBV);
        const double e = std::exp(base.epsilon);
        const double amplify = std::pow((e + 1.0) / (e - 1.0), 2.0);
        const double sigma_one =
            base.mu() / (2.0 * base.s) * amplify * std::sqrt(base.s * p * (1.0 - p));
        double total = 0.0;
        auto cfg = base;
        for (int i = 0; i < trials; ++i) {
            cfg.seed = SplitMix64::hash(777, static_cast<uint64_t>(i));
            const auto fam = derive_hash_family(cfg, 0);
            SplitMix64 noise(SplitMix64::hash(0xeeee, static_cast<uint64_t>(i)));
            const auto va = dpbv_encode(5.0, fam, cfg, noise);
            const auto vb = dpbv_encode(5.0 + d, fam, cfg, noise);
            total += dpbv_estimate_raw(hamming_distance(va, vb), cfg);
        }
        const double mean = total / trials;
        CHECK(std::abs(mean - d) <= 3.0 * sigma_one / std::sqrt(trials));
    }
}

TEST_CASE("estimates concentrate inside the error bound") {
    const auto base = make_config(0.0, 50.0, 25.0, 1000, 2.0);
    const double beta = 0.05;
    const double bound = error_bound(base, beta, Mechanism::DPBV);
    const double d = 20.0;
    const int trials = 2000;
    int inside = 0;
    auto cfg = base;
    for (int i = 0; i < trials; ++i) {
        cfg.seed = SplitMix64::hash(888, static_cast<uint64_t>(i));
        const auto fam = derive_hash_family(cfg, 0);
        SplitMix64 noise(SplitMix64::hash(0xdddd, static_cast<uint64_t>(i)));
        const auto va = dpbv_encode(15.0, fam, cfg, noise);
        const auto vb = dpbv_encode(15.0 + d, fam, cfg, noise);
        if (std::abs(dpbv_estimate_raw(hamming_distance(va, vb), cfg) - d) <= bound) ++inside;
    }
    CHECK(inside >= static_cast<int>(0.95 * trials));
}

TEST_CASE("collinear local-view triples decode additively, bit for bit") {
    // windows are intervals, so a sorted triple inside one view can never
    // produce an inner bit unseen by the outer pair
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        EncodingConfig c = make_config(0.0, 20.0, rng.next_uniform(0.5, 3.0),
                                       64 + static_cast<uint32_t>(rng.next_below(512)), 2.0,
                                       rng.next());
        const auto fam = derive_hash_family(c, 0);
        const double span = std::min(c.local_view(), c.upper - c.lower);
        const double x = rng.next_uniform(c.lower, c.upper - span);
        const double z = x + rng.next_uniform(0.0, span);
        const double y = rng.next_uniform(x, z);
        const auto bx = bv_encode(x, fam, c);
        const auto by = bv_encode(y, fam, c);
        const auto bz = bv_encode(z, fam, c);
        REQUIRE(hamming_distance(bx, bz) == hamming_distance(bx, by) + hamming_distance(by, bz));
    }
}

TEST_CASE("distance matrix construction") {
    const auto scheme = uniform_scheme(make_config(0.0, 50.0, 25.0, 256), 2);

    SECTION("single record gives the 1x1 zero matrix") {
        Dataset one;
        one.attribute_names = {"a0", "a1"};
        one.records.push_back({0, {1.0, 2.0}, std::nullopt});
        const auto enc = encode_dataset(one, scheme, Mechanism::BV, 3);
        const auto dm = build_distance_matrix(enc, scheme);
        REQUIRE(dm.size() == 1);
        CHECK(dm.distances.at(0, 0) == 0.0);
    }

    SECTION("identical records under the noiseless mechanism are all-zero") {
        Dataset data;
        data.attribute_names = {"a0", "a1"};
        for (int i = 0; i < 4; ++i)
            data.records.push_back({static_cast<uint64_t>(i), {10.0, 30.0}, std::nullopt});
        const auto enc = encode_dataset(data, scheme, Mechanism::BV, 3);
        const auto dm = build_distance_matrix(enc, scheme);
        for (size_t i = 0; i < dm.size(); ++i)
            for (size_t j = 0; j < dm.size(); ++j) CHECK(dm.distances.at(i, j) == 0.0);
    }

    SECTION("one attribute reduces to the scalar estimator") {
        const auto scalar_scheme = uniform_scheme(make_config(0.0, 50.0, 25.0, 512), 1);
        Dataset data;
        data.attribute_names = {"a0"};
        data.records.push_back({0, {10.0}, std::nullopt});
        data.records.push_back({1, {30.0}, std::nullopt});
        const auto enc = encode_dataset(data, scalar_scheme, Mechanism::DPBV, 3);
        const auto dm = build_distance_matrix(enc, scalar_scheme);
        const double h = hamming_distance(enc.records[0].vectors[0], enc.records[1].vectors[0]);
        const double raw = dpbv_estimate_raw(h, scalar_scheme.attribute_config(0));
        CHECK(dm.distances.at(0, 1) == Catch::Approx(std::max(0.0, raw)));
        CHECK(dm.distances.at(0, 1) == dm.distances.at(1, 0));
    }

    SECTION("worker count does not change the result") {
        const auto data = make_uniform(30, 2, 0.0, 50.0, 9);
        const auto enc = encode_dataset(data, scheme, Mechanism::DPBV, 5);
        const auto serial = build_distance_matrix(enc, scheme, 1);
        const auto threaded = build_distance_matrix(enc, scheme, 4);
        CHECK(serial.distances.values() == threaded.distances.values());
    }
}

TEST_CASE("raw scalar matrix keeps signed values and matches the estimator") {
    const auto scheme = uniform_scheme(make_config(0.0, 50.0, 25.0, 256), 1);
    Dataset data;
    data.attribute_names = {"x"};
    data.records.push_back({0, {20.0}, std::nullopt});
    data.records.push_back({1, {20.0}, std::nullopt});
    const auto enc = encode_dataset(data, scheme, Mechanism::DPBV, 11);
    const auto raw = build_raw_scalar_matrix(enc, scheme);
    const double h = hamming_distance(enc.records[0].vectors[0], enc.records[1].vectors[0]);
    CHECK(raw.at(0, 1) == Catch::Approx(dpbv_estimate_raw(h, scheme.attribute_config(0))));
    // the diagonal is the raw self-estimate (negative offset), by design
    CHECK(raw.at(0, 0) == Catch::Approx(dpbv_estimate_raw(0.0, scheme.attribute_config(0))));
}

TEST_CASE("consistence is a no-op on an already additive local matrix") {
    // three collinear points inside one local view, exact distances
    Matrix m(3, 0.0);
    m.set_symmetric(0, 1, 1.0);
    m.set_symmetric(1, 2, 1.5);
    m.set_symmetric(0, 2, 2.5);
    ConsistenceOptions opts;
    opts.tolerance = 1e-9;
    opts.min_witnesses = 1;
    const auto result = distance_consistence(DistanceMatrix::from(m), opts);
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 3; ++j)
            CHECK(result.matrix.distances.at(i, j) == Catch::Approx(m.at(i, j)).margin(1e-12));
}

TEST_CASE("consistence repairs a saturated chain entry") {
    // true positions 0, 2, 4 with a view radius around 2.4: the outer pair
    // saturates near 2.16 and gets rebuilt from the two local hops
    Matrix m(3, 0.0);
    m.set_symmetric(0, 1, 2.0);
    m.set_symmetric(1, 2, 2.0);
    m.set_symmetric(0, 2, 2.16);
    ConsistenceOptions opts;
    opts.tolerance = 0.05;
    opts.known_local_radius = 2.1;
    const auto result = distance_consistence(DistanceMatrix::from(m), opts);
    CHECK(result.matrix.distances.at(0, 2) == Catch::Approx(4.0));
    CHECK(result.matrix.revision[0 * 3 + 2] == 1);
    CHECK(result.matrix.distances.at(0, 1) == 2.0);
    CHECK(result.matrix.revision[0 * 3 + 1] == 0);
    CHECK(result.revised_entries == 1);
}

TEST_CASE("consistence walks chains across multiple rounds") {
    // line 0-2-4-6-8 with saturation at ~2.4; only adjacent pairs are local
    const std::vector<double> pos = {0.0, 2.0, 4.0, 6.0, 8.0};
    const double sat = 2.4;
    Matrix m(5, 0.0);
    for (size_t i = 0; i < 5; ++i)
        for (size_t j = i + 1; j < 5; ++j)
            m.set_symmetric(i, j, std::min(pos[j] - pos[i], sat));
    ConsistenceOptions opts;
    opts.tolerance = 0.01;
    opts.known_local_radius = 2.2;
    const auto result = distance_consistence(DistanceMatrix::from(m), opts);
    for (size_t i = 0; i < 5; ++i)
        for (size_t j = i + 1; j < 5; ++j)
            CHECK(result.matrix.distances.at(i, j) == Catch::Approx(pos[j] - pos[i]));
    CHECK(result.rounds >= 2);
    // revision rounds grow along the chain
    CHECK(result.matrix.revision[0 * 5 + 2] == 1);
    CHECK(result.matrix.revision[0 * 5 + 4] >= 2);
}

TEST_CASE("consistence leaves unreachable entries at their original values") {
    // two far points with no intermediary: nothing to rebuild from
    Matrix m(2, 0.0);
    m.set_symmetric(0, 1, 5.0);
    ConsistenceOptions opts;
    opts.tolerance = 0.1;
    opts.known_local_radius = 1.0;
    const auto result = distance_consistence(DistanceMatrix::from(m), opts);
    CHECK(result.matrix.distances.at(0, 1) == 5.0);
    CHECK(result.matrix.revision[1] == 0);
}

TEST_CASE("consistence validates its inputs") {
    Matrix m(2, 0.0);
    m.set_symmetric(0, 1, 1.0);
    ConsistenceOptions opts;
    opts.tolerance = -1.0;
    CHECK_THROWS_AS(distance_consistence(DistanceMatrix::from(m), opts), InputError);

    Matrix asym(2, 0.0);
    asym.set(0, 1, 1.0);
    opts.tolerance = 0.1;
    CHECK_THROWS_AS(distance_consistence(DistanceMatrix::from(asym), opts), InputError);
}

TEST_CASE("local radius detection finds the additive plateau") {
    // six points on a line, exact distances truncated at 3.0
    const std::vector<double> pos = {0.0, 1.0, 2.0, 2.8, 4.5, 7.0};
    Matrix m(pos.size(), 0.0);
    for (size_t i = 0; i < pos.size(); ++i)
        for (size_t j = i + 1; j < pos.size(); ++j)
            m.set_symmetric(i, j, std::min(pos[j] - pos[i], 3.0));
    const auto r = detect_local_radius(m, 1e-9, 1);
    REQUIRE(r.has_value());
    // largest verified-additive entry: d(0,3) = 2.8 decomposes through 1 or 2
    CHECK(*r == Catch::Approx(2.8));
}

TEST_CASE("end-to-end consistence lowers the average estimation error") {
    const auto config = make_config(0.0, 25.0, 3.0, 1000, 2.0, 77);
    const auto scheme = uniform_scheme(config, 1);
    const auto data = make_uniform_scalar(60, 0.0, 25.0, 123);
    const auto truth = exact_distance_matrix(data);
    const auto enc = encode_dataset(data, scheme, Mechanism::BV, 55);
    const auto estimated = build_distance_matrix(enc, scheme);

    ConsistenceOptions opts;
    opts.tolerance = default_consistence_tolerance(config, Mechanism::BV);
    const auto refined = distance_consistence(estimated, opts);

    const double err_before = average_estimation_error(truth, estimated.distances);
    const double err_after = average_estimation_error(truth, refined.matrix.distances);
    INFO("unrefined " << err_before << " refined " << err_after
                      << " radius " << refined.radius_used);
    CHECK(refined.revised_entries > 0);
    CHECK(err_after <= err_before);

    // entries within the radius are untouched
    const size_t n = estimated.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            if (estimated.distances.at(i, j) <= refined.radius_used)
                CHECK(refined.matrix.distances.at(i, j) == estimated.distances.at(i, j));
}

TEST_CASE("average estimation error basics") {
    Matrix truth(3, 0.0), est(3, 0.0);
    truth.set_symmetric(0, 1, 1.0);
    truth.set_symmetric(0, 2, 2.0);
    truth.set_symmetric(1, 2, 3.0);
    est = truth;
    CHECK(average_estimation_error(truth, est) == 0.0);
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 3; ++j)
            if (i != j) est.set(i, j, truth.at(i, j) + 1.0);
    CHECK(average_estimation_error(truth, est) == Catch::Approx(1.0));
    CHECK_THROWS_AS(average_estimation_error(truth, Matrix(2, 0.0)), InputError);
}

TEST_CASE("matrix files round-trip bit-exactly") {
    SplitMix64 rng(31);
    Matrix m(7, 0.0);
    for (size_t i = 0; i < 7; ++i)
        for (size_t j = i + 1; j < 7; ++j) m.set_symmetric(i, j, rng.next_uniform(0.0, 100.0));
    const auto dir = std::filesystem::temp_directory_path();
    const auto bin = (dir / "dpbv_matrix_test.bin").string();
    const auto csv = (dir / "dpbv_matrix_test.csv").string();
    write_matrix_binary(m, bin);
    write_matrix_csv(m, csv);
    CHECK(read_matrix_binary(bin).values() == m.values());
    CHECK(read_matrix_csv(csv).values() == m.values());
    std::filesystem::remove(bin);
    std::filesystem::remove(csv);
}
