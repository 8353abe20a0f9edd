#pragma once
// Experiment harness: method registry, budget presets, main comparison runs,
// SNR and budget sweeps, skill ablations, and channel validation, with
// byte-deterministic CSV / Markdown / JSONL reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "skillcom/pipeline.hpp"

namespace skillcom {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class ExperimentError : public std::runtime_error {
  public:
    explicit ExperimentError(const std::string& what) : std::runtime_error(what) {}
};

// ---- method registry -------------------------------------------------------

struct MethodSpec {
    std::string name;
    bool monolithic = false;
    AbstractionMode mode = AbstractionMode::Heuristic;
    bool dedup = false;
};

inline const std::vector<MethodSpec>& registered_methods() {
    static const std::vector<MethodSpec> methods = {
        {"monolithic", true, AbstractionMode::Heuristic, false},
        {"skillcom-heuristic", false, AbstractionMode::Heuristic, false},
        {"skillcom-enrich", false, AbstractionMode::LlmEnriched, false},
        {"skillcom-struct", false, AbstractionMode::StructuredLlm, false},
        {"skillcom-struct-dedup", false, AbstractionMode::StructuredLlm, true},
    };
    return methods;
}

inline const MethodSpec& lookup_method(const std::string& name) {
    for (const auto& m : registered_methods())
        if (m.name == name) return m;
    std::string known;
    for (const auto& m : registered_methods()) known += (known.empty() ? "" : ", ") + m.name;
    throw ConfigError("unknown method \"" + name + "\" (registered: " + known + ")");
}

// ---- budget presets (paper table footnote values) --------------------------

inline const std::map<std::string, BudgetTriple>& budget_presets() {
    static const std::map<std::string, BudgetTriple> presets = {
        {"qa-tight", {2, 24.0, 150}},    {"qa-med", {3, 36.0, 225}},
        {"qa-default", {4, 48.0, 300}},  {"qa-generous", {6, 72.0, 450}},
        {"dst-tight", {2, 28.0, 175}},   {"dst-med", {3, 42.0, 260}},
        {"dst-default", {5, 56.0, 350}}, {"dst-generous", {7, 84.0, 525}},
    };
    return presets;
}

inline BudgetTriple lookup_budget(const std::string& name) {
    auto it = budget_presets().find(name);
    if (it == budget_presets().end()) throw ConfigError("unknown budget preset \"" + name + "\"");
    return it->second;
}

inline std::vector<std::string> default_budget_sweep(TaskKind kind) {
    if (kind == TaskKind::QA) return {"qa-tight", "qa-med", "qa-default", "qa-generous"};
    return {"dst-tight", "dst-med", "dst-default", "dst-generous"};
}

inline BudgetTriple default_budgets(TaskKind kind) {
    return kind == TaskKind::QA ? lookup_budget("qa-default") : lookup_budget("dst-default");
}

// ---- experiment spec -------------------------------------------------------

struct ExperimentSpec {
    TaskKind task = TaskKind::QA;
    std::string data_path;
    int n = 10;
    uint64_t seed = 42;
    std::vector<std::string> methods = {"monolithic", "skillcom-heuristic"};
    double snr_db = 7.0;
    double code_rate = 0.5;
    std::optional<BudgetTriple> budgets;                // default: per-task preset
    std::vector<double> snr_grid;                       // sweep-snr axis (default 4..14)
    std::vector<std::string> budget_levels;             // sweep-budget axis (default presets)
    std::string out_dir = "out";
    PriorityWeights weights;
    StopMode stop_mode = StopMode::StopAtFirstViolation;
    double dedup_threshold = 0.7;
    std::optional<RepairStrategy> repair_override;      // default binding: QA gen, DST guided
    double monolithic_block_g = 0.5;

    BudgetTriple effective_budgets() const { return budgets ? *budgets : default_budgets(task); }

    std::vector<double> effective_snr_grid() const {
        if (!snr_grid.empty()) return snr_grid;
        std::vector<double> grid;
        for (int s = 4; s <= 14; ++s) grid.push_back(s);
        return grid;
    }

    std::vector<std::string> effective_budget_levels() const {
        return budget_levels.empty() ? default_budget_sweep(task) : budget_levels;
    }
};

inline RepairStrategy default_repair(TaskKind kind) {
    return kind == TaskKind::QA ? RepairStrategy::Generative : RepairStrategy::Guided;
}

inline PipelineConfig make_pipeline_config(const ExperimentSpec& spec, const MethodSpec& method) {
    PipelineConfig cfg;
    cfg.abstraction.mode = method.mode;
    cfg.weights = spec.weights;
    cfg.stop_mode = spec.stop_mode;
    cfg.dedup_enabled = method.dedup;
    cfg.dedup_threshold = spec.dedup_threshold;
    cfg.repair = spec.repair_override.value_or(default_repair(spec.task));
    cfg.channel = {spec.snr_db, spec.code_rate};
    cfg.budgets = spec.effective_budgets();
    cfg.seed = spec.seed;
    cfg.monolithic_block_g = spec.monolithic_block_g;
    return cfg;
}

// ---- default mock rules -----------------------------------------------------

// Deterministic offline backend used by `--provider mock`: extractive echoes
// over the prompts, good enough to exercise every pipeline stage.
inline std::vector<MockRule> default_mock_rules() {
    return {
        {"execute_qa", R"(\[(?:Evidence|Summary)\] ([^\n]+))", true, "$1"},
        {"execute_dst", R"(\[SlotValue\] ([^\n]+))", true, "$1"},
        {"enrich", "", false, "KEYWORDS: context\nSUMMARY: summary unavailable"},
        {"extract", R"(Source:\n([^\n.]{1,60}))", true,
         R"([{"type":"evidence","payload":"$1","relevance":0.9,"importance":0.8}])"},
        {"dedup", R"(ids: ([0-9, ]+))", true, "$1"},
        {"repair", "", false, "Evidence: detail unavailable"},
        {"monolithic_compress", R"(Source:\n([\s\S]{1,160}))", true, "$1"},
        {"monolithic_decode", R"(([a-z]+-[a-z]+=[a-z0-9 ]+))", true, "$1"},
        {"monolithic_decode", R"(Context: ([^\n]{1,80}))", true, "$1"},
    };
}

// ---- dataset handle ---------------------------------------------------------

struct Dataset {
    TaskKind kind = TaskKind::QA;
    std::vector<QaExample> qa;
    std::vector<DstExample> dst;

    size_t size() const { return kind == TaskKind::QA ? qa.size() : dst.size(); }
};

inline Dataset load_dataset(TaskKind kind, const std::string& path) {
    Dataset d;
    d.kind = kind;
    if (kind == TaskKind::QA)
        d.qa = load_qa(path);
    else
        d.dst = load_dst(path);
    return d;
}

inline Dataset sample_dataset(const Dataset& d, int n, uint64_t seed) {
    Dataset out;
    out.kind = d.kind;
    if (d.kind == TaskKind::QA)
        out.qa = sample(d.qa, n, seed);
    else
        out.dst = sample(d.dst, n, seed);
    return out;
}

// ---- method execution --------------------------------------------------------

struct MethodResult {
    std::string method;
    RunSummary summary;
    std::vector<SampleResult> samples;
    std::vector<nlohmann::ordered_json> traces;
};

inline MethodResult run_method(const Dataset& data, const ExperimentSpec& spec,
                               const std::string& method_name, LlmProvider& provider,
                               std::optional<PipelineConfig> config_override = std::nullopt) {
    const MethodSpec& method = lookup_method(method_name);
    MethodResult res;
    res.method = method_name;
    size_t n = data.size();
    if (n == 0) throw ExperimentError("no examples to run");
    for (size_t i = 0; i < n; ++i) {
        PipelineConfig cfg = config_override ? *config_override : make_pipeline_config(spec, method);
        cfg.seed = rng_derive_seed(spec.seed, i);  // same channel noise across methods

        SourceDocument source;
        TaskDescriptor task;
        std::string example_id;
        if (data.kind == TaskKind::QA) {
            source = qa_source(data.qa[i]);
            task = qa_task(data.qa[i]);
            example_id = data.qa[i].id;
        } else {
            source = dst_source(data.dst[i]);
            task = dst_task(data.dst[i]);
            example_id = data.dst[i].id;
        }

        auto [output, trace] = method.monolithic ? run_monolithic(source, task, cfg, provider)
                                                 : run_skillcom(source, task, cfg, provider);

        SampleResult sr = score_sample(example_id, task.kind, output, task.reference);
        sr.tx_tokens = trace.selection.total_tokens;
        for (const auto& [role, c] : trace.provider_calls) sr.llm_calls += c;
        size_t sel = trace.selection.selected_ids.size();
        sr.delivered_unit_fraction =
            sel == 0 ? 1.0
                     : static_cast<double>(sel - trace.transmission.erased_ids.size()) /
                           static_cast<double>(sel);
        res.samples.push_back(sr);

        auto tj = trace_to_json(trace);
        tj["example_id"] = example_id;
        tj["method"] = method_name;
        res.traces.push_back(tj);
    }
    res.summary = aggregate(res.samples);
    return res;
}

// ---- formatting --------------------------------------------------------------

namespace fmt {

inline std::string num(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

inline std::string opt(const std::optional<double>& v, int prec = 4) {
    return v ? num(*v, prec) : "";
}

}  // namespace fmt

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ExperimentError("cannot write " + path.string());
    out << content;
}

inline std::string results_csv(const std::vector<MethodResult>& results,
                               const ExperimentSpec& spec) {
    std::string s = "method,task,n,snr_db,em,token_f1,jga,slot_f1,llm_calls,tx_tokens,delivered_frac\n";
    for (const auto& r : results) {
        s += r.method;
        s += std::string(",") + (spec.task == TaskKind::QA ? "qa" : "dst");
        s += "," + std::to_string(r.summary.count);
        s += "," + fmt::num(spec.snr_db, 1);
        s += "," + fmt::opt(r.summary.mean_em);
        s += "," + fmt::opt(r.summary.mean_token_f1);
        s += "," + fmt::opt(r.summary.mean_jga);
        s += "," + fmt::opt(r.summary.mean_slot_f1);
        s += "," + fmt::num(r.summary.mean_llm_calls, 2);
        s += "," + fmt::num(r.summary.mean_tx_tokens, 2);
        s += "," + fmt::num(r.summary.mean_delivered_fraction, 4);
        s += "\n";
    }
    return s;
}

inline std::string results_markdown(const std::vector<MethodResult>& results,
                                    const ExperimentSpec& spec) {
    bool qa = spec.task == TaskKind::QA;
    std::string m1 = qa ? "EM" : "JGA";
    std::string m2 = qa ? "F1" : "Slot F1";
    std::string s = "| Method | " + m1 + " | " + m2 + " | LLM Calls | Tx Tokens |\n";
    s += "|---|---|---|---|---|\n";
    for (const auto& r : results) {
        double a = qa ? r.summary.mean_em.value_or(0) : r.summary.mean_jga.value_or(0);
        double b = qa ? r.summary.mean_token_f1.value_or(0) : r.summary.mean_slot_f1.value_or(0);
        s += "| " + r.method + " | " + fmt::num(a, 2) + " | " + fmt::num(b, 2) + " | " +
             fmt::num(r.summary.mean_llm_calls, 1) + " | " + fmt::num(r.summary.mean_tx_tokens, 1) +
             " |\n";
    }
    return s;
}

inline nlohmann::ordered_json spec_to_json(const ExperimentSpec& spec) {
    auto b = spec.effective_budgets();
    nlohmann::ordered_json j;
    j["task"] = spec.task == TaskKind::QA ? "qa" : "dst";
    j["data"] = spec.data_path;
    j["n"] = spec.n;
    j["seed"] = spec.seed;
    j["methods"] = spec.methods;
    j["snr_db"] = spec.snr_db;
    j["code_rate"] = spec.code_rate;
    j["budgets"] = {b.max_units, b.max_tokens, b.max_chars};
    j["weights"] = {spec.weights.alpha_r, spec.weights.alpha_s, spec.weights.alpha_g,
                    spec.weights.alpha_c};
    j["stop_mode"] =
        spec.stop_mode == StopMode::StopAtFirstViolation ? "stop_at_first_violation" : "skip_infeasible";
    j["dedup_threshold"] = spec.dedup_threshold;
    j["repair"] = repair_strategy_name(spec.repair_override.value_or(default_repair(spec.task)));
    j["monolithic_block_g"] = spec.monolithic_block_g;
    return j;
}

// ---- commands ----------------------------------------------------------------

// main comparison: one aggregate row per method, plus per-example traces
inline std::vector<MethodResult> cmd_run(const ExperimentSpec& spec, LlmProvider& provider) {
    auto data = sample_dataset(load_dataset(spec.task, spec.data_path), spec.n, spec.seed);
    std::vector<MethodResult> results;
    for (const auto& name : spec.methods) results.push_back(run_method(data, spec, name, provider));

    std::filesystem::path out(spec.out_dir);
    write_file(out / "results.csv", results_csv(results, spec));
    write_file(out / "results.md", results_markdown(results, spec));
    write_file(out / "resolved_config.json", spec_to_json(spec).dump(2) + "\n");
    for (const auto& r : results) {
        std::string traces;
        for (const auto& t : r.traces) traces += t.dump() + "\n";
        write_file(out / ("traces_" + r.method + ".jsonl"), traces);
    }
    return results;
}

// metric-vs-SNR sweep, long-format CSV (method, snr_db, metric, value)
inline void cmd_sweep_snr(const ExperimentSpec& spec, LlmProvider& provider) {
    auto grid = spec.effective_snr_grid();
    if (grid.empty()) throw ConfigError("sweep-snr: empty SNR grid");
    auto data = sample_dataset(load_dataset(spec.task, spec.data_path), spec.n, spec.seed);

    std::string csv = "method,snr_db,metric,value\n";
    for (const auto& name : spec.methods) {
        for (double snr : grid) {
            ExperimentSpec point = spec;
            point.snr_db = snr;
            auto r = run_method(data, point, name, provider);
            auto row = [&](const std::string& metric, double v) {
                csv += name + "," + fmt::num(snr, 1) + "," + metric + "," + fmt::num(v, 4) + "\n";
            };
            if (spec.task == TaskKind::QA) {
                row("em", r.summary.mean_em.value_or(0));
                row("token_f1", r.summary.mean_token_f1.value_or(0));
            } else {
                row("jga", r.summary.mean_jga.value_or(0));
                row("slot_f1", r.summary.mean_slot_f1.value_or(0));
            }
            row("llm_calls", r.summary.mean_llm_calls);
            row("tx_tokens", r.summary.mean_tx_tokens);
            row("delivered_frac", r.summary.mean_delivered_fraction);
        }
    }
    std::filesystem::path out(spec.out_dir);
    write_file(out / "sweep_snr.csv", csv);
    write_file(out / "resolved_config.json", spec_to_json(spec).dump(2) + "\n");
}

// metric-vs-budget table across the listed presets
inline void cmd_sweep_budget(const ExperimentSpec& spec, LlmProvider& provider) {
    auto levels = spec.effective_budget_levels();
    if (levels.empty()) throw ConfigError("sweep-budget: empty budget list");
    auto data = sample_dataset(load_dataset(spec.task, spec.data_path), spec.n, spec.seed);

    bool qa = spec.task == TaskKind::QA;
    std::string m1 = qa ? "em" : "jga";
    std::string m2 = qa ? "token_f1" : "slot_f1";
    std::string csv = "method,budget,b_u,b_kappa,b_c," + m1 + "," + m2 + ",llm_calls,tx_tokens\n";

    // markdown mirrors the paper layout: per metric, methods x budget levels
    std::map<std::string, std::map<std::string, std::pair<double, double>>> cells;
    for (const auto& name : spec.methods) {
        for (const auto& level : levels) {
            ExperimentSpec point = spec;
            point.budgets = lookup_budget(level);
            auto b = *point.budgets;
            auto r = run_method(data, point, name, provider);
            double v1 = qa ? r.summary.mean_em.value_or(0) : r.summary.mean_jga.value_or(0);
            double v2 = qa ? r.summary.mean_token_f1.value_or(0) : r.summary.mean_slot_f1.value_or(0);
            csv += name + "," + level + "," + std::to_string(b.max_units) + "," +
                   fmt::num(b.max_tokens, 0) + "," + std::to_string(b.max_chars) + "," +
                   fmt::num(v1, 4) + "," + fmt::num(v2, 4) + "," +
                   fmt::num(r.summary.mean_llm_calls, 2) + "," +
                   fmt::num(r.summary.mean_tx_tokens, 2) + "\n";
            cells[name][level] = {v1, v2};
        }
    }

    std::string md = "| Method |";
    for (const auto& l : levels) md += " " + m1 + " " + l + " |";
    for (const auto& l : levels) md += " " + m2 + " " + l + " |";
    md += "\n|---|";
    for (size_t i = 0; i < 2 * levels.size(); ++i) md += "---|";
    md += "\n";
    for (const auto& name : spec.methods) {
        md += "| " + name + " |";
        for (const auto& l : levels) md += " " + fmt::num(cells[name][l].first, 2) + " |";
        for (const auto& l : levels) md += " " + fmt::num(cells[name][l].second, 2) + " |";
        md += "\n";
    }

    std::filesystem::path out(spec.out_dir);
    write_file(out / "sweep_budget.csv", csv);
    write_file(out / "sweep_budget.md", md);
    write_file(out / "resolved_config.json", spec_to_json(spec).dump(2) + "\n");
}

// one-flag-at-a-time ablation of a base method, with deltas vs the full model
inline void cmd_ablate(const ExperimentSpec& spec, const std::string& base_method,
                       LlmProvider& provider) {
    const MethodSpec& base = lookup_method(base_method);
    if (base.monolithic) throw ConfigError("cannot ablate the monolithic baseline");
    auto data = sample_dataset(load_dataset(spec.task, spec.data_path), spec.n, spec.seed);

    struct Variant {
        std::string label;
        AblationFlags flags;
    };
    std::vector<Variant> variants;
    variants.push_back({"full", {}});
    {
        AblationFlags f;
        f.repair = false;
        variants.push_back({"repair_off", f});
    }
    {
        AblationFlags f;
        f.channel_aware = false;
        variants.push_back({"channel_aware_off", f});
    }
    if (base.dedup) {
        AblationFlags f;
        f.dedup = false;
        variants.push_back({"dedup_off", f});
    }
    {
        AblationFlags f;
        f.llm_abstraction = false;
        f.dedup = false;  // no LLM abstraction implies no LLM dedup either
        variants.push_back({"llm_abstraction_off", f});
    }

    bool qa = spec.task == TaskKind::QA;
    std::string m1 = qa ? "em" : "jga";
    std::string m2 = qa ? "token_f1" : "slot_f1";
    std::string csv = "variant,llm_abs,dedup,ch_aware,repair," + m1 + "," + m2 + ",delta_" + m1 +
                      ",delta_" + m2 + "\n";
    std::string md = "| LLM Abs. | Dedup | Ch-Aware | Repair | " + m1 + " | " + m2 + " | d" + m1 +
                     " | d" + m2 + " |\n|---|---|---|---|---|---|---|---|\n";

    double base1 = 0, base2 = 0;
    for (size_t i = 0; i < variants.size(); ++i) {
        PipelineConfig cfg = make_pipeline_config(spec, base);
        cfg.ablation = variants[i].flags;
        auto r = run_method(data, spec, base_method, provider, cfg);
        double v1 = qa ? r.summary.mean_em.value_or(0) : r.summary.mean_jga.value_or(0);
        double v2 = qa ? r.summary.mean_token_f1.value_or(0) : r.summary.mean_slot_f1.value_or(0);
        if (i == 0) {
            base1 = v1;
            base2 = v2;
        }
        auto onoff = [](bool b) { return b ? std::string("on") : std::string("off"); };
        const auto& f = variants[i].flags;
        csv += variants[i].label + "," + onoff(f.llm_abstraction) + "," +
               onoff(f.dedup && base.dedup) + "," + onoff(f.channel_aware) + "," +
               onoff(f.repair) + "," + fmt::num(v1, 4) + "," + fmt::num(v2, 4) + "," +
               fmt::num(v1 - base1, 4) + "," + fmt::num(v2 - base2, 4) + "\n";
        md += "| " + onoff(f.llm_abstraction) + " | " + onoff(f.dedup && base.dedup) + " | " +
              onoff(f.channel_aware) + " | " + onoff(f.repair) + " | " + fmt::num(v1, 2) + " | " +
              fmt::num(v2, 2) + " | " + fmt::num(v1 - base1, 2) + " | " + fmt::num(v2 - base2, 2) +
              " |\n";
    }

    std::filesystem::path out(spec.out_dir);
    write_file(out / "ablation.csv", csv);
    write_file(out / "ablation.md", md);
    write_file(out / "resolved_config.json", spec_to_json(spec).dump(2) + "\n");
}

// channel self-validation report CSV
inline std::string channel_report_csv(const std::vector<ChannelValidationCell>& report) {
    std::string csv = "snr_db,byte_len,g,R,analytic_per,empirical_per,trials,z\n";
    for (const auto& c : report) {
        csv += fmt::num(c.snr_db, 1) + "," + std::to_string(c.byte_len) + "," +
               fmt::num(c.robustness, 2) + "," + fmt::num(c.code_rate, 2) + "," +
               fmt::num(c.analytic_per, 8) + "," + fmt::num(c.empirical_per, 8) + "," +
               std::to_string(c.trials) + "," + fmt::num(c.z, 3) + "\n";
    }
    return csv;
}

inline std::vector<ChannelValidationCell> cmd_validate_channel(
    const std::vector<double>& snr_grid, const std::vector<uint64_t>& byte_lens,
    const std::vector<double>& g_values, double code_rate, int trials, uint64_t seed,
    const std::string& out_path) {
    auto report = validate_channel(snr_grid, byte_lens, g_values, code_rate, trials, seed);
    if (!out_path.empty())
        write_file(out_path, channel_report_csv(report));
    return report;
}

// render a results.csv back to a Markdown table
inline std::string csv_to_markdown(const std::string& csv) {
    auto lines = split_lines(csv);
    if (lines.empty()) return "";
    std::string md;
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string row = "|";
        std::string cell;
        size_t ncells = 0;
        for (char ch : lines[i] + ",") {
            if (ch == ',') {
                row += " " + (cell.empty() ? std::string("-") : cell) + " |";
                ++ncells;
                cell.clear();
            } else {
                cell.push_back(ch);
            }
        }
        md += row + "\n";
        if (i == 0) {
            md += "|";
            for (size_t k = 0; k < ncells; ++k) md += "---|";
            md += "\n";
        }
    }
    return md;
}

}  // namespace skillcom
