#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "erfc_oracle.hpp"
#include "skillcom/channel.hpp"

using namespace skillcom;

TEST_CASE("bit_error_rate matches the quadrature oracle") {
    // spec anchor points
    CHECK_THAT(bit_error_rate(0.0), Catch::Matchers::WithinRel(7.86e-2, 1e-2));
    CHECK_THAT(bit_error_rate(7.0), Catch::Matchers::WithinRel(7.73e-4, 1e-2));
    CHECK(bit_error_rate(100.0) < 1e-300);

    for (double snr = 0.0; snr <= 20.0; snr += 0.5) {
        double x = std::sqrt(std::pow(10.0, snr / 10.0));
        double expected = 0.5 * static_cast<double>(oracle::erfc_quadrature(x));
        CHECK_THAT(bit_error_rate(snr), Catch::Matchers::WithinRel(expected, 1e-10));
    }
}

TEST_CASE("erfc_local agrees with libm at spot points") {
    for (double x : {0.1, 0.5, 1.0, 1.9, 2.0, 3.5, 7.0}) {
        CHECK_THAT(erfc_local(x), Catch::Matchers::WithinRel(std::erfc(x), 1e-11));
        CHECK_THAT(erfc_local(-x), Catch::Matchers::WithinRel(std::erfc(-x), 1e-11));
    }
}

TEST_CASE("bit_error_rate is strictly decreasing in SNR") {
    double prev = bit_error_rate(-10.0);
    for (double snr = -9.5; snr <= 20.0; snr += 0.5) {
        double p = bit_error_rate(snr);
        CHECK(p < prev);
        CHECK(p > 0.0);
        CHECK(p <= 0.5);
        prev = p;
    }
    CHECK_THROWS_AS(bit_error_rate(std::nan("")), std::invalid_argument);
}

TEST_CASE("coded_length_bits is the exact ceiling") {
    CHECK(coded_length_bits(10, 1.0, 1.0) == 80);
    CHECK(coded_length_bits(10, 0.5, 0.5) == 240);
    CHECK(coded_length_bits(0, 0.3, 0.5) == 0);
    CHECK(coded_length_bits(7, 0.3, 0.7) == 136);  // ceil(7*8*1.7/0.7) = ceil(136.0) = 136
    CHECK(coded_length_bits(1, 0.9, 0.3) == 30);   // ceil(29.33...) = 30
    // bounds from the formula: n in [ceil(8L/R), ceil(16L/R)]
    for (uint64_t L : {1ULL, 12ULL, 96ULL})
        for (double g : {0.0, 0.3, 1.0}) {
            uint64_t n = coded_length_bits(L, g, 0.5);
            CHECK(n >= L * 8 * 2);   // 8L/R with R=0.5
            CHECK(n <= L * 8 * 4);   // 16L/R
        }
    CHECK_THROWS_AS(coded_length_bits(1, 1.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(coded_length_bits(1, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("packet_erasure_prob basics") {
    CHECK_THAT(per_from_ber(0.5, 1), Catch::Matchers::WithinAbs(0.5, 1e-15));
    CHECK_THAT(per_from_ber(0.01, 100),
               Catch::Matchers::WithinAbs(1.0 - std::pow(0.99, 100), 1e-12));
    CHECK(packet_erasure_prob(7.0, 0, 0.5, 0.5) == 0.0);
    // monotone increasing in byte length
    double prev = 0.0;
    for (uint64_t L = 1; L < 200; L += 7) {
        double p = packet_erasure_prob(7.0, L, 0.5, 0.5);
        CHECK(p > prev);
        prev = p;
    }
    // monotone decreasing in snr (below ~3 dB a 32-byte packet's PER rounds
    // to exactly 1.0 in double, so start where it is representably below 1)
    prev = 1.0;
    for (double snr = 3; snr <= 14; snr += 1) {
        double p = packet_erasure_prob(snr, 32, 0.5, 0.5);
        CHECK(p < prev);
        prev = p;
    }
    // non-increasing in g
    prev = 1.0;
    for (double g = 0.0; g <= 1.0; g += 0.1) {
        double p = packet_erasure_prob(7.0, 32, g, 0.5);
        CHECK(p <= prev);
        prev = p;
    }
}

static std::vector<SemanticUnit> some_units(int n) {
    std::vector<SemanticUnit> units;
    for (int i = 0; i < n; ++i)
        units.push_back(make_unit(i, UnitType::Evidence, "payload number " + std::to_string(i),
                                  0.5, 0.5, 0.5));
    return units;
}

TEST_CASE("transmit delivers everything at very high SNR") {
    auto units = some_units(20);
    auto res = transmit(units, {100.0, 0.5}, 1);
    CHECK(res.delivered.size() == 20);
    CHECK(res.erased_ids.empty());
    for (size_t i = 0; i < 20; ++i) CHECK(res.delivered[i] == units[i]);
}

TEST_CASE("transmit is deterministic and partitions the id set") {
    auto units = some_units(50);
    ChannelState ch{4.0, 0.5};
    auto a = transmit(units, ch, 7);
    auto b = transmit(units, ch, 7);
    CHECK(a.erased_ids == b.erased_ids);
    REQUIRE(a.delivered.size() == b.delivered.size());
    for (size_t i = 0; i < a.delivered.size(); ++i) CHECK(a.delivered[i] == b.delivered[i]);

    std::set<uint32_t> all;
    for (const auto& u : a.delivered) {
        CHECK_FALSE(a.erased_ids.count(u.id));
        all.insert(u.id);
    }
    for (auto id : a.erased_ids) all.insert(id);
    CHECK(all.size() == units.size());
}

TEST_CASE("transmit outcome is independent of unit order") {
    auto units = some_units(10);
    auto rev = units;
    std::reverse(rev.begin(), rev.end());
    ChannelState ch{5.0, 0.5};
    CHECK(transmit(units, ch, 3).erased_ids == transmit(rev, ch, 3).erased_ids);
}

TEST_CASE("transmit rejects duplicate ids") {
    auto units = some_units(2);
    units[1].id = units[0].id;
    CHECK_THROWS_AS(transmit(units, {7.0, 0.5}, 1), std::invalid_argument);
}

TEST_CASE("empirical erasure rate matches analytic PER over 50k trials") {
    auto unit = make_unit(0, UnitType::Evidence, std::string(32 - kFrameHeaderBytes, 'a'),
                          0.5, 0.5, 0.5);
    REQUIRE(frame_length(unit) == 32);
    ChannelState ch{7.0, 0.5};
    double per = packet_erasure_prob(7.0, 32, 0.5, 0.5);
    const int trials = 50000;
    int erased = 0;
    for (int t = 0; t < trials; ++t) {
        auto res = transmit({unit}, ch, rng_derive_seed(99, t));
        if (!res.erased_ids.empty()) ++erased;
    }
    double sigma = std::sqrt(trials * per * (1 - per));
    CHECK(std::fabs(erased - trials * per) < 4.0 * sigma);
}

TEST_CASE("bit-level sampling agrees with packet-level PER") {
    auto unit = make_unit(0, UnitType::Keyword, "abc", 0.5, 0.5, 0.5);
    ChannelState ch{4.0, 0.5};
    double per = packet_erasure_prob(4.0, frame_length(unit), 0.5, 0.5);
    const int trials = 20000;
    int erased = 0;
    for (int t = 0; t < trials; ++t) {
        auto res = transmit({unit}, ch, rng_derive_seed(123, t), ErasureSampling::BitLevel);
        if (!res.erased_ids.empty()) ++erased;
    }
    double sigma = std::sqrt(trials * per * (1 - per));
    CHECK(std::fabs(erased - trials * per) < 4.0 * sigma);
}

TEST_CASE("validate_channel report") {
    CHECK_THROWS_AS(validate_channel({7.0}, {32}, {0.5}, 0.5, 0, 1), std::invalid_argument);

    auto report = validate_channel({100.0}, {32}, {0.5}, 0.5, 1000, 1);
    REQUIRE(report.size() == 1);
    CHECK(report[0].empirical_per == 0.0);
    CHECK(report[0].analytic_per < 1e-12);
    CHECK(report[0].z == 0.0);
    CHECK_FALSE(report[0].flagged);

    auto grid = validate_channel({4, 7, 10}, {12, 96}, {0.4, 0.8}, 0.5, 2000, 42);
    CHECK(grid.size() == 12);
    for (const auto& c : grid) CHECK_FALSE(c.flagged);
}
