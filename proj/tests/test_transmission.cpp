#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "skillcom/rng.hpp"
#include "skillcom/transmission.hpp"

using namespace skillcom;

TEST_CASE("priority_score is the weighted linear form") {
    PriorityWeights w;  // 0.4 / 0.3 / 0.2 / 0.01
    auto u = make_unit(0, UnitType::Evidence, "abcd", 0.5, 0.5, 0.5);  // kappa = 1
    CHECK_THAT(priority_score(u, w), Catch::Matchers::WithinAbs(0.44, 1e-12));

    auto v = make_unit(1, UnitType::Evidence, "abcd", 1.0, 1.0, 1.0);
    CHECK_THAT(priority_score(v, w), Catch::Matchers::WithinAbs(0.89, 1e-12));

    auto z = make_unit(2, UnitType::Evidence, "", 0.0, 0.0, 0.0);  // kappa floors at 1
    CHECK_THAT(priority_score(z, w), Catch::Matchers::WithinAbs(-0.01, 1e-12));

    PriorityWeights heavy{0.4, 0.3, 0.2, 0.1};
    auto big = make_unit(3, UnitType::Evidence, std::string(40, 'a'), 1.0, 1.0, 1.0);  // kappa = 10
    CHECK_THAT(priority_score(big, heavy), Catch::Matchers::WithinAbs(-0.1, 1e-12));

    PriorityWeights bad{-0.1, 0.3, 0.2, 0.01};
    CHECK_THROWS_AS(priority_score(u, bad), std::invalid_argument);
}

static std::vector<SemanticUnit> ranked_units() {
    // priorities with default weights: descending by construction
    return {
        make_unit(0, UnitType::Evidence, "abcd", 0.9, 0.9, 0.9, false),  // w = 0.80
        make_unit(1, UnitType::Evidence, "abcd", 0.5, 0.5, 0.5, false),  // w = 0.44
        make_unit(2, UnitType::Evidence, "abcd", 0.1, 0.1, 0.1, false),  // w = 0.08
    };
}

TEST_CASE("greedy_select takes the highest-priority feasible prefix") {
    auto units = ranked_units();
    PriorityWeights w;

    auto all = greedy_select(units, {3, 100, 1000}, w);
    CHECK(all.selected_ids == std::vector<uint32_t>{0, 1, 2});
    CHECK_THAT(all.objective, Catch::Matchers::WithinAbs(0.80 + 0.44 + 0.08, 1e-9));
    CHECK(all.total_tokens == 3.0);
    CHECK(all.total_chars == 12);

    auto two = greedy_select(units, {2, 100, 1000}, w);
    CHECK(two.selected_ids == std::vector<uint32_t>{0, 1});
    REQUIRE(two.dropped.size() == 1);
    CHECK(two.dropped[0].first == 2);
    CHECK(two.dropped[0].second == "unit_budget");
}

TEST_CASE("stop modes differ when a mid-rank unit is infeasible") {
    PriorityWeights w;
    std::vector<SemanticUnit> units = {
        make_unit(0, UnitType::Evidence, "abcd", 0.9, 0.9, 0.9),                 // w=0.80, 4 chars
        make_unit(1, UnitType::Evidence, std::string(50, 'a'), 0.8, 0.8, 0.8),   // big, 50 chars
        make_unit(2, UnitType::Evidence, "abcd", 0.1, 0.1, 0.1),                 // w=0.08, 4 chars
    };
    BudgetTriple budgets{3, 100, 20};  // unit 1 breaks the char budget

    auto stop = greedy_select(units, budgets, w, StopMode::StopAtFirstViolation);
    CHECK(stop.selected_ids == std::vector<uint32_t>{0});
    REQUIRE(stop.dropped.size() == 2);
    CHECK(stop.dropped[0].second == "char_budget");
    CHECK(stop.dropped[1].second == "after_stop");

    auto skip = greedy_select(units, budgets, w, StopMode::SkipInfeasible);
    CHECK(skip.selected_ids == std::vector<uint32_t>{0, 2});
}

TEST_CASE("selection is invariant to input permutation") {
    auto units = ranked_units();
    auto shuffled = units;
    std::swap(shuffled[0], shuffled[2]);
    PriorityWeights w;
    BudgetTriple b{2, 100, 1000};
    CHECK(greedy_select(units, b, w).selected_ids == greedy_select(shuffled, b, w).selected_ids);
}

TEST_CASE("equal priorities break ties toward the smaller id") {
    PriorityWeights w;
    std::vector<SemanticUnit> units = {
        make_unit(7, UnitType::Keyword, "abcd", 0.5, 0.5, 0.5),
        make_unit(3, UnitType::Keyword, "wxyz", 0.5, 0.5, 0.5),
    };
    auto out = greedy_select(units, {1, 100, 1000}, w);
    CHECK(out.selected_ids == std::vector<uint32_t>{3});
}

TEST_CASE("source_order_select ignores priorities") {
    PriorityWeights w;
    std::vector<SemanticUnit> units = {
        make_unit(0, UnitType::Evidence, "abcd", 0.0, 0.0, 0.0),  // low priority, low id
        make_unit(1, UnitType::Evidence, "abcd", 1.0, 1.0, 1.0),
    };
    auto out = source_order_select(units, {1, 100, 1000}, w, StopMode::StopAtFirstViolation);
    CHECK(out.selected_ids == std::vector<uint32_t>{0});
    CHECK(greedy_select(units, {1, 100, 1000}, w).selected_ids == std::vector<uint32_t>{1});
}

TEST_CASE("budget accounting never exceeds any budget") {
    PriorityWeights w;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<SemanticUnit> units;
        size_t n = 1 + rng_u64(11, 0, trial) % 15;
        for (size_t i = 0; i < n; ++i) {
            size_t len = 1 + rng_u64(11, 1, trial * 100 + i) % 30;
            units.push_back(make_unit(static_cast<uint32_t>(i), UnitType::Evidence,
                                      std::string(len, 'a'),
                                      rng_uniform(11, 2, trial * 100 + i),
                                      rng_uniform(11, 3, trial * 100 + i),
                                      rng_uniform(11, 4, trial * 100 + i)));
        }
        BudgetTriple b{static_cast<int>(1 + rng_u64(11, 5, trial) % 8),
                       static_cast<double>(1 + rng_u64(11, 6, trial) % 40),
                       static_cast<int>(1 + rng_u64(11, 7, trial) % 120)};
        for (auto mode : {StopMode::StopAtFirstViolation, StopMode::SkipInfeasible}) {
            auto out = greedy_select(units, b, w, mode);
            CHECK(static_cast<int>(out.selected_ids.size()) <= b.max_units);
            CHECK(out.total_tokens <= b.max_tokens + 1e-9);
            CHECK(out.total_chars <= b.max_chars);
            CHECK(out.selected_ids.size() + out.dropped.size() == units.size());
        }
    }
}

TEST_CASE("greedy never beats the exhaustive oracle; oracle is feasible") {
    PriorityWeights w;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<SemanticUnit> units;
        size_t n = 1 + rng_u64(23, 0, trial) % 12;
        for (size_t i = 0; i < n; ++i) {
            size_t len = 1 + rng_u64(23, 1, trial * 100 + i) % 12;  // kappa <= 3: w stays >= 0
            units.push_back(make_unit(static_cast<uint32_t>(i), UnitType::Evidence,
                                      std::string(len, 'a'),
                                      rng_uniform(23, 2, trial * 100 + i),
                                      rng_uniform(23, 3, trial * 100 + i),
                                      rng_uniform(23, 4, trial * 100 + i)));
        }
        BudgetTriple b{static_cast<int>(1 + rng_u64(23, 5, trial) % 6),
                       static_cast<double>(1 + rng_u64(23, 6, trial) % 15),
                       static_cast<int>(1 + rng_u64(23, 7, trial) % 60)};

        auto best = brute_force_select(units, b, w);
        CHECK(static_cast<int>(best.selected_ids.size()) <= b.max_units);
        CHECK(best.total_tokens <= b.max_tokens + 1e-9);
        CHECK(best.total_chars <= b.max_chars);

        auto greedy_stop = greedy_select(units, b, w, StopMode::StopAtFirstViolation);
        auto greedy_skip = greedy_select(units, b, w, StopMode::SkipInfeasible);
        CHECK(greedy_stop.objective <= best.objective + 1e-9);
        CHECK(greedy_skip.objective <= best.objective + 1e-9);
        // with nonnegative priorities, skipping dominates stopping
        CHECK(greedy_skip.objective >= greedy_stop.objective - 1e-9);
    }
}

TEST_CASE("oracle ties resolve to the lexicographically smallest id set") {
    PriorityWeights w{1.0, 0.0, 0.0, 0.0};
    std::vector<SemanticUnit> units = {
        make_unit(0, UnitType::Keyword, "abcd", 0.5, 0.0, 0.0),
        make_unit(1, UnitType::Keyword, "abcd", 0.5, 0.0, 0.0),
        make_unit(2, UnitType::Keyword, "abcd", 0.5, 0.0, 0.0),
    };
    auto out = brute_force_select(units, {2, 100, 1000}, w);
    CHECK(out.selected_ids == std::vector<uint32_t>{0, 1});
}

TEST_CASE("brute_force_select rejects more than 20 units") {
    std::vector<SemanticUnit> units;
    for (uint32_t i = 0; i < 21; ++i)
        units.push_back(make_unit(i, UnitType::Keyword, "x", 0.5, 0.5, 0.5));
    CHECK_THROWS_AS(brute_force_select(units, {2, 100, 1000}, PriorityWeights{}),
                    std::invalid_argument);
}

TEST_CASE("jaccard-fallback dedup drops near-duplicates, keeps the rest") {
    std::vector<SemanticUnit> units = {
        make_unit(0, UnitType::Evidence, "the bridge was built in 1957", 0.9, 0.9, 0.5),
        make_unit(1, UnitType::Evidence, "the bridge was built in 1957.", 0.8, 0.8, 0.5),
        make_unit(2, UnitType::Evidence, "copper was mined nearby", 0.7, 0.7, 0.5),
    };
    auto kept = dedup_units(units, nullptr, 0.7);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].id == 0);  // higher priority survives
    CHECK(kept[1].id == 2);

    // threshold 1.0 keeps everything except exact token-set duplicates
    CHECK(dedup_units(units, nullptr, 1.0).size() == 3);
    CHECK_THROWS_AS(dedup_units(units, nullptr, 1.5), std::invalid_argument);
    CHECK(dedup_units({}, nullptr, 0.7).empty());
}

TEST_CASE("provider-backed dedup keeps exactly the ids the provider names") {
    std::vector<SemanticUnit> units = {
        make_unit(0, UnitType::Evidence, "aaa", 0.9, 0.9, 0.5),
        make_unit(1, UnitType::Evidence, "bbb", 0.8, 0.8, 0.5),
        make_unit(2, UnitType::Evidence, "ccc", 0.7, 0.7, 0.5),
    };
    MockProvider mock({{"dedup", "", false, "0, 2, 99"}});  // 99 is hallucinated
    auto kept = dedup_units(units, &mock, 0.7);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].id == 0);
    CHECK(kept[1].id == 2);
    CHECK(mock.calls_by_role().at("dedup") == 1);
}

TEST_CASE("dedup falls back to jaccard when the provider fails") {
    std::vector<SemanticUnit> units = {
        make_unit(0, UnitType::Evidence, "same words here", 0.9, 0.9, 0.5),
        make_unit(1, UnitType::Evidence, "same words here", 0.8, 0.8, 0.5),
    };
    MockProvider mock;
    mock.fail_roles({"dedup"});
    std::vector<std::string> warnings;
    auto kept = dedup_units(units, &mock, 0.7, &warnings);
    CHECK(kept.size() == 1);
    CHECK(warnings.size() == 1);
}
