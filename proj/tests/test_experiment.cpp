#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "skillcom/experiment.hpp"

using namespace skillcom;
namespace fs = std::filesystem;

namespace {

std::string fixture(const char* name) {
    return std::string(SKILLCOM_SOURCE_DIR) + "/data/fixtures/" + name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentSpec qa_spec(const fs::path& out_dir) {
    ExperimentSpec spec;
    spec.task = TaskKind::QA;
    spec.data_path = fixture("qa_fixture.jsonl");
    spec.n = 6;
    spec.seed = 42;
    spec.methods = {"monolithic", "skillcom-heuristic"};
    spec.snr_db = 10.0;
    spec.out_dir = out_dir.string();
    return spec;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("method and budget registries") {
    CHECK(lookup_method("monolithic").monolithic);
    CHECK(lookup_method("skillcom-struct-dedup").dedup);
    CHECK_THROWS_AS(lookup_method("no-such-method"), ConfigError);

    auto b = lookup_budget("qa-default");
    CHECK(b.max_units == 4);
    CHECK(b.max_tokens == 48.0);
    CHECK(b.max_chars == 300);
    CHECK(lookup_budget("dst-generous").max_units == 7);
    CHECK_THROWS_AS(lookup_budget("qa-enormous"), ConfigError);

    CHECK(default_budget_sweep(TaskKind::QA).size() == 4);
    CHECK(default_repair(TaskKind::QA) == RepairStrategy::Generative);
    CHECK(default_repair(TaskKind::DST) == RepairStrategy::Guided);
}

TEST_CASE("cmd_run writes deterministic reports") {
    fs::path out1 = fs::temp_directory_path() / "skillcom_exp_run1";
    fs::path out2 = fs::temp_directory_path() / "skillcom_exp_run2";
    fs::remove_all(out1);
    fs::remove_all(out2);

    MockProvider p1(default_mock_rules());
    auto results = cmd_run(qa_spec(out1), p1);
    REQUIRE(results.size() == 2);
    CHECK(results[0].method == "monolithic");
    CHECK(results[0].summary.count == 6);
    // the monolithic baseline is exactly two calls per example
    CHECK(results[0].summary.mean_llm_calls == 2.0);
    CHECK(results[1].summary.mean_llm_calls >= 1.0);

    for (const char* f : {"results.csv", "results.md", "resolved_config.json",
                          "traces_monolithic.jsonl", "traces_skillcom-heuristic.jsonl"})
        CHECK(fs::exists(out1 / f));

    auto csv = slurp(out1 / "results.csv");
    CHECK(count_lines(csv) == 3);  // header + one row per method
    CHECK(csv.find("monolithic,qa,6,10.0,") != std::string::npos);
    CHECK(count_lines(slurp(out1 / "traces_monolithic.jsonl")) == 6);

    // a second identical run produces byte-identical outputs
    MockProvider p2(default_mock_rules());
    cmd_run(qa_spec(out2), p2);
    for (const char* f : {"results.csv", "results.md", "resolved_config.json",
                          "traces_monolithic.jsonl", "traces_skillcom-heuristic.jsonl"})
        CHECK(slurp(out1 / f) == slurp(out2 / f));

    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("cmd_run rejects unknown methods and oversampling") {
    fs::path out = fs::temp_directory_path() / "skillcom_exp_bad";
    MockProvider p(default_mock_rules());
    auto spec = qa_spec(out);
    spec.methods = {"no-such-method"};
    CHECK_THROWS_AS(cmd_run(spec, p), ConfigError);
    spec = qa_spec(out);
    spec.n = 999;  // fixture has 10 examples
    CHECK_THROWS_AS(cmd_run(spec, p), std::invalid_argument);
    fs::remove_all(out);
}

TEST_CASE("snr sweep emits one long-format row per method x snr x metric") {
    fs::path out = fs::temp_directory_path() / "skillcom_exp_snr";
    fs::remove_all(out);
    MockProvider p(default_mock_rules());
    auto spec = qa_spec(out);
    spec.n = 3;
    spec.methods = {"skillcom-heuristic"};
    spec.snr_grid = {4.0, 8.0, 12.0};
    cmd_sweep_snr(spec, p);
    auto csv = slurp(out / "sweep_snr.csv");
    // QA: em, token_f1, llm_calls, tx_tokens, delivered_frac = 5 metrics
    CHECK(count_lines(csv) == 1 + 1 * 3 * 5);
    CHECK(csv.rfind("method,snr_db,metric,value\n", 0) == 0);
    CHECK(csv.find("skillcom-heuristic,4.0,em,") != std::string::npos);
    CHECK(csv.find("skillcom-heuristic,12.0,delivered_frac,") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("budget sweep covers every preset level") {
    fs::path out = fs::temp_directory_path() / "skillcom_exp_budget";
    fs::remove_all(out);
    MockProvider p(default_mock_rules());
    auto spec = qa_spec(out);
    spec.n = 3;
    spec.methods = {"skillcom-heuristic"};
    cmd_sweep_budget(spec, p);
    auto csv = slurp(out / "sweep_budget.csv");
    CHECK(count_lines(csv) == 1 + 4);  // header + 4 qa presets
    CHECK(csv.find("skillcom-heuristic,qa-tight,2,24,150,") != std::string::npos);
    CHECK(csv.find("qa-generous,6,72,450,") != std::string::npos);

    auto md = slurp(out / "sweep_budget.md");
    CHECK(md.find("| Method |") == 0);
    CHECK(md.find("qa-default") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("ablation writes one row per variant with deltas") {
    fs::path out = fs::temp_directory_path() / "skillcom_exp_ablate";
    fs::remove_all(out);
    MockProvider p(default_mock_rules());
    auto spec = qa_spec(out);
    spec.n = 3;
    cmd_ablate(spec, "skillcom-struct-dedup", p);
    auto csv = slurp(out / "ablation.csv");
    // full, repair_off, channel_aware_off, dedup_off, llm_abstraction_off
    CHECK(count_lines(csv) == 1 + 5);
    CHECK(csv.find("full,on,on,on,on,") != std::string::npos);
    CHECK(csv.find("repair_off,on,on,on,off,") != std::string::npos);
    CHECK(csv.find("llm_abstraction_off,off,off,on,on,") != std::string::npos);
    // the full variant's deltas are zero by construction
    CHECK(csv.find(",0.0000,0.0000\n") != std::string::npos);

    // non-dedup base method: no dedup_off variant
    fs::path out2 = fs::temp_directory_path() / "skillcom_exp_ablate2";
    fs::remove_all(out2);
    auto spec2 = qa_spec(out2);
    spec2.n = 3;
    spec2.out_dir = out2.string();
    cmd_ablate(spec2, "skillcom-heuristic", p);
    CHECK(count_lines(slurp(out2 / "ablation.csv")) == 1 + 4);

    CHECK_THROWS_AS(cmd_ablate(spec, "monolithic", p), ConfigError);
    fs::remove_all(out);
    fs::remove_all(out2);
}

TEST_CASE("channel validation command writes the report CSV") {
    fs::path out = fs::temp_directory_path() / "skillcom_exp_chan";
    fs::remove_all(out);
    auto report = cmd_validate_channel({7.0, 10.0}, {12, 96}, {0.4, 0.8}, 0.5, 2000, 1,
                                       (out / "channel.csv").string());
    CHECK(report.size() == 8);
    auto csv = slurp(out / "channel.csv");
    CHECK(count_lines(csv) == 9);
    CHECK(csv.rfind("snr_db,byte_len,g,R,analytic_per,empirical_per,trials,z\n", 0) == 0);
    fs::remove_all(out);
}

TEST_CASE("DST runs bind guided repair by default") {
    fs::path out = fs::temp_directory_path() / "skillcom_exp_dst";
    fs::remove_all(out);
    ExperimentSpec spec;
    spec.task = TaskKind::DST;
    spec.data_path = fixture("dst_fixture.jsonl");
    spec.n = 5;
    spec.seed = 7;
    spec.methods = {"skillcom-heuristic"};
    spec.snr_db = 100.0;  // noiseless: slot extraction should be clean
    spec.budgets = BudgetTriple{12, 150.0, 800};  // keep every slot unit in play
    spec.out_dir = out.string();
    MockProvider p(default_mock_rules());
    auto results = cmd_run(spec, p);
    REQUIRE(results.size() == 1);
    CHECK(results[0].summary.mean_slot_f1.value_or(0) > 0.5);
    // guided repair issues no repair-role calls
    for (const auto& t : results[0].traces)
        CHECK(t["provider_calls"].count("repair") == 0);
    fs::remove_all(out);
}

TEST_CASE("csv_to_markdown renders a pipe table") {
    std::string md = csv_to_markdown("a,b,c\n1,,3\n");
    CHECK(md ==
          "| a | b | c |\n"
          "|---|---|---|\n"
          "| 1 | - | 3 |\n");
    CHECK(csv_to_markdown("").empty());
}
