// skillcom experiment harness CLI.
//
// Subcommands: run, sweep-snr, sweep-budget, ablate, validate-channel, report.
// Exit codes: 0 ok, 1 experiment error, 2 config error.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "skillcom/experiment.hpp"
#include "skillcom/http_provider.hpp"

using namespace skillcom;

namespace {

struct CliOptions {
    std::string config_path;
    std::string provider = "mock";  // mock | http
    std::string mock_rules_path;
    std::string cache_dir;
    std::string base_url = "https://api.deepseek.com";
    std::string model = "deepseek-chat";
    std::string api_key_env = "SKILLCOM_API_KEY";
    ExperimentSpec spec;
    std::string task = "qa";
    std::string budgets;     // preset name or "Bu,Bk,Bc"
    std::string stop_mode = "stop";
    std::string repair;      // generative | guided | none (default: per task)
    std::vector<double> weights;
};

TaskKind parse_task(const std::string& s) {
    if (s == "qa") return TaskKind::QA;
    if (s == "dst") return TaskKind::DST;
    throw ConfigError("task must be qa or dst, got \"" + s + "\"");
}

BudgetTriple parse_budgets(const std::string& s, TaskKind kind) {
    if (s.empty()) return default_budgets(kind);
    if (budget_presets().count(s)) return lookup_budget(s);
    BudgetTriple b;
    char comma1, comma2;
    std::istringstream in(s);
    if (!(in >> b.max_units >> comma1 >> b.max_tokens >> comma2 >> b.max_chars) ||
        comma1 != ',' || comma2 != ',')
        throw ConfigError("budgets must be a preset name or \"Bu,Bk,Bc\", got \"" + s + "\"");
    b.validate();
    return b;
}

void apply_config_file(CliOptions& opt) {
    if (opt.config_path.empty()) return;
    std::ifstream in(opt.config_path);
    if (!in) throw ConfigError("cannot open config file " + opt.config_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid config JSON: " + std::string(e.what()));
    }
    auto& s = opt.spec;
    if (j.contains("task")) opt.task = j["task"].get<std::string>();
    if (j.contains("data")) s.data_path = j["data"].get<std::string>();
    if (j.contains("n")) s.n = j["n"].get<int>();
    if (j.contains("seed")) s.seed = j["seed"].get<uint64_t>();
    if (j.contains("methods")) s.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("snr_db")) s.snr_db = j["snr_db"].get<double>();
    if (j.contains("code_rate")) s.code_rate = j["code_rate"].get<double>();
    if (j.contains("budgets")) {
        if (j["budgets"].is_string())
            opt.budgets = j["budgets"].get<std::string>();
        else
            s.budgets = BudgetTriple{j["budgets"][0].get<int>(), j["budgets"][1].get<double>(),
                                     j["budgets"][2].get<int>()};
    }
    if (j.contains("snr_grid")) s.snr_grid = j["snr_grid"].get<std::vector<double>>();
    if (j.contains("budget_levels"))
        s.budget_levels = j["budget_levels"].get<std::vector<std::string>>();
    if (j.contains("out_dir")) s.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("weights")) {
        auto w = j["weights"].get<std::vector<double>>();
        if (w.size() != 4) throw ConfigError("weights must have 4 entries");
        s.weights = {w[0], w[1], w[2], w[3]};
    }
    if (j.contains("stop_mode")) opt.stop_mode = j["stop_mode"].get<std::string>();
    if (j.contains("dedup_threshold")) s.dedup_threshold = j["dedup_threshold"].get<double>();
    if (j.contains("repair")) opt.repair = j["repair"].get<std::string>();
    if (j.contains("monolithic_block_g"))
        s.monolithic_block_g = j["monolithic_block_g"].get<double>();
}

void finalize_spec(CliOptions& opt) {
    opt.spec.task = parse_task(opt.task);
    if (!opt.budgets.empty()) opt.spec.budgets = parse_budgets(opt.budgets, opt.spec.task);
    if (opt.stop_mode == "stop")
        opt.spec.stop_mode = StopMode::StopAtFirstViolation;
    else if (opt.stop_mode == "skip")
        opt.spec.stop_mode = StopMode::SkipInfeasible;
    else
        throw ConfigError("stop_mode must be stop or skip");
    if (!opt.repair.empty()) {
        if (opt.repair == "generative")
            opt.spec.repair_override = RepairStrategy::Generative;
        else if (opt.repair == "guided")
            opt.spec.repair_override = RepairStrategy::Guided;
        else if (opt.repair == "none")
            opt.spec.repair_override = RepairStrategy::None;
        else
            throw ConfigError("repair must be generative, guided or none");
    }
    if (!opt.weights.empty()) {
        if (opt.weights.size() != 4) throw ConfigError("--weights needs 4 values");
        opt.spec.weights = {opt.weights[0], opt.weights[1], opt.weights[2], opt.weights[3]};
    }
    if (opt.spec.data_path.empty()) throw ConfigError("no dataset path given (--data)");
}

std::vector<MockRule> load_mock_rules(const std::string& path) {
    if (path.empty()) return default_mock_rules();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock rules file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid mock rules JSON: " + std::string(e.what()));
    }
    std::vector<MockRule> rules;
    for (const auto& r : j) {
        rules.push_back({r.value("role_tag", ""), r.at("pattern").get<std::string>(),
                         r.value("regex", false), r.at("reply").get<std::string>()});
    }
    return rules;
}

struct ProviderStack {
    std::unique_ptr<LlmProvider> backend;
    std::unique_ptr<CachingProvider> cache;
    LlmProvider& top() { return cache ? *cache : *backend; }
};

ProviderStack make_provider(const CliOptions& opt) {
    ProviderStack p;
    std::string model_id;
    if (opt.provider == "mock") {
        p.backend = std::make_unique<MockProvider>(load_mock_rules(opt.mock_rules_path));
        model_id = "mock";
    } else if (opt.provider == "http") {
        HttpProviderConfig cfg;
        cfg.base_url = opt.base_url;
        cfg.model = opt.model;
        cfg.api_key_env = opt.api_key_env;
        p.backend = std::make_unique<HttpProvider>(cfg);
        model_id = opt.model;
    } else {
        throw ConfigError("provider must be mock or http");
    }
    if (!opt.cache_dir.empty())
        p.cache = std::make_unique<CachingProvider>(*p.backend, opt.cache_dir, model_id);
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SkillCom semantic communication experiment harness"};
    app.require_subcommand(1);
    CliOptions opt;

    auto add_common = [&](CLI::App* cmd, bool needs_data) {
        cmd->add_option("--config", opt.config_path, "JSON config file");
        cmd->add_option("--provider", opt.provider, "mock | http");
        cmd->add_option("--mock-rules", opt.mock_rules_path, "mock rule file (JSON)");
        cmd->add_option("--cache-dir", opt.cache_dir, "response cache directory");
        cmd->add_option("--base-url", opt.base_url, "HTTP provider base URL");
        cmd->add_option("--model", opt.model, "model name");
        cmd->add_option("--api-key-env", opt.api_key_env, "env var holding the API key");
        cmd->add_option("--seed", opt.spec.seed, "experiment seed");
        cmd->add_option("--out", opt.spec.out_dir, "output directory");
        if (needs_data) {
            cmd->add_option("--task", opt.task, "qa | dst");
            cmd->add_option("--data", opt.spec.data_path, "JSONL dataset path");
            cmd->add_option("-n", opt.spec.n, "sample size");
            cmd->add_option("--methods", opt.spec.methods, "method names");
            cmd->add_option("--snr", opt.spec.snr_db, "channel SNR in dB");
            cmd->add_option("--code-rate", opt.spec.code_rate, "code rate R");
            cmd->add_option("--budgets", opt.budgets, "budget preset name or Bu,Bk,Bc");
            cmd->add_option("--weights", opt.weights, "alpha_r alpha_s alpha_g alpha_c");
            cmd->add_option("--stop-mode", opt.stop_mode, "stop | skip");
            cmd->add_option("--repair", opt.repair, "generative | guided | none");
            cmd->add_option("--dedup-threshold", opt.spec.dedup_threshold, "Jaccard threshold");
        }
    };

    auto* run = app.add_subcommand("run", "main comparison over the method list");
    add_common(run, true);

    auto* sweep_snr = app.add_subcommand("sweep-snr", "metric-vs-SNR sweep");
    add_common(sweep_snr, true);
    sweep_snr->add_option("--snr-grid", opt.spec.snr_grid, "SNR grid in dB (default 4..14)");

    auto* sweep_budget = app.add_subcommand("sweep-budget", "metric-vs-budget sweep");
    add_common(sweep_budget, true);
    sweep_budget->add_option("--budget-levels", opt.spec.budget_levels,
                             "budget preset names (default: four per-task presets)");

    std::string base_method = "skillcom-struct-dedup";
    auto* ablate = app.add_subcommand("ablate", "one-flag-at-a-time skill ablation");
    add_common(ablate, true);
    ablate->add_option("--base", base_method, "full model to ablate");

    auto* validate = app.add_subcommand("validate-channel", "channel Monte Carlo self-check");
    std::vector<double> v_snr, v_g = {0.4, 0.8};
    std::vector<uint64_t> v_len = {12, 32, 96};
    double v_rate = 0.5;
    int v_trials = 50000;
    uint64_t v_seed = 42;
    std::string v_out = "channel_validation.csv";
    validate->add_option("--snr-grid", v_snr, "SNR grid in dB (default 4..14)");
    validate->add_option("--lengths", v_len, "unit byte lengths");
    validate->add_option("--g", v_g, "robustness values");
    validate->add_option("--code-rate", v_rate, "code rate R");
    validate->add_option("--trials", v_trials, "Monte Carlo trials per cell");
    validate->add_option("--seed", v_seed, "RNG seed");
    validate->add_option("--out", v_out, "report CSV path");

    std::string report_csv;
    auto* report = app.add_subcommand("report", "render a results CSV as Markdown");
    report->add_option("csv", report_csv, "CSV file to render")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (report->parsed()) {
            std::ifstream in(report_csv);
            if (!in) throw ConfigError("cannot open " + report_csv);
            std::stringstream ss;
            ss << in.rdbuf();
            std::cout << csv_to_markdown(ss.str());
            return 0;
        }
        if (validate->parsed()) {
            if (v_snr.empty())
                for (int s = 4; s <= 14; ++s) v_snr.push_back(s);
            if (v_trials < 1000) throw ConfigError("--trials must be >= 1000");
            auto cells = cmd_validate_channel(v_snr, v_len, v_g, v_rate, v_trials, v_seed, v_out);
            int flagged = 0;
            for (const auto& c : cells)
                if (c.flagged) ++flagged;
            std::cout << "cells: " << cells.size() << ", flagged (|z|>4): " << flagged
                      << ", report: " << v_out << "\n";
            return flagged == 0 ? 0 : 1;
        }

        apply_config_file(opt);
        finalize_spec(opt);
        auto provider = make_provider(opt);

        if (run->parsed()) {
            auto results = cmd_run(opt.spec, provider.top());
            std::cout << results_markdown(results, opt.spec);
            std::cout << "reports written to " << opt.spec.out_dir << "\n";
        } else if (sweep_snr->parsed()) {
            cmd_sweep_snr(opt.spec, provider.top());
            std::cout << "sweep written to " << opt.spec.out_dir << "/sweep_snr.csv\n";
        } else if (sweep_budget->parsed()) {
            cmd_sweep_budget(opt.spec, provider.top());
            std::cout << "sweep written to " << opt.spec.out_dir << "/sweep_budget.csv\n";
        } else if (ablate->parsed()) {
            cmd_ablate(opt.spec, base_method, provider.top());
            std::cout << "ablation written to " << opt.spec.out_dir << "/ablation.csv\n";
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
