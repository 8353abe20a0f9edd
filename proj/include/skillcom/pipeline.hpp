#pragma once
// Pipeline orchestration: the four-skill chain (abstract -> select ->
// channel -> repair -> execute) with per-stage traces, plus the monolithic
// single-block baseline.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "skillcom/abstraction.hpp"
#include "skillcom/channel.hpp"
#include "skillcom/core.hpp"
#include "skillcom/datasets.hpp"
#include "skillcom/execution.hpp"
#include "skillcom/metrics.hpp"
#include "skillcom/provider.hpp"
#include "skillcom/repair.hpp"
#include "skillcom/transmission.hpp"

namespace skillcom {

enum class RepairStrategy { Generative, Guided, None };

inline const char* repair_strategy_name(RepairStrategy s) {
    switch (s) {
        case RepairStrategy::Generative: return "generative";
        case RepairStrategy::Guided: return "guided";
        case RepairStrategy::None: return "none";
    }
    return "?";
}

struct AblationFlags {
    bool llm_abstraction = true;  // off: force heuristic mode
    bool dedup = true;            // off: skip dedup
    bool channel_aware = true;    // off: source-order selection (budgets kept)
    bool repair = true;           // off: repaired context = received units
};

struct PipelineConfig {
    AbstractionConfig abstraction;
    PriorityWeights weights;
    StopMode stop_mode = StopMode::StopAtFirstViolation;
    bool dedup_enabled = false;
    bool dedup_uses_llm = true;  // when dedup is on: LLM call vs Jaccard-only
    double dedup_threshold = 0.7;
    RepairStrategy repair = RepairStrategy::Generative;
    ChannelState channel;
    BudgetTriple budgets{4, 48.0, 300};
    uint64_t seed = 0;
    double monolithic_block_g = 0.5;
    AblationFlags ablation;
};

struct StageTiming {
    std::string stage;
    long micros = 0;
};

struct PipelineTrace {
    std::vector<SemanticUnit> units_abstracted;
    SelectionOutcome selection;
    TransmissionResult transmission;
    RepairedContext repaired;
    TaskOutput output;
    std::vector<std::string> warnings;
    std::map<std::string, int> provider_calls;  // by role tag, this example only
    std::vector<StageTiming> timings;           // in-memory only, not serialized
};

namespace detail {

class StageClock {
  public:
    explicit StageClock(PipelineTrace& trace) : trace_(trace) {}
    template <typename F>
    auto stage(const std::string& name, F&& f) {
        auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            record(name, t0);
        } else {
            auto r = f();
            record(name, t0);
            return r;
        }
    }

  private:
    void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
        auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
        trace_.timings.push_back({name, static_cast<long>(us)});
    }
    PipelineTrace& trace_;
};

inline std::vector<SemanticUnit> units_by_ids(const std::vector<SemanticUnit>& units,
                                              const std::vector<uint32_t>& ids) {
    std::vector<SemanticUnit> out;
    for (uint32_t id : ids)
        for (const auto& u : units)
            if (u.id == id) out.push_back(u);
    return out;
}

}  // namespace detail

// builds the source document for a QA example (paragraph sentences, in order)
inline SourceDocument qa_source(const QaExample& ex) {
    SourceDocument doc;
    for (const auto& [title, sentences] : ex.context_paragraphs) {
        for (const auto& s : sentences) {
            doc.segments.push_back(s);
            if (!doc.text.empty()) doc.text += " ";
            doc.text += s;
        }
    }
    return doc;
}

inline TaskDescriptor qa_task(const QaExample& ex) {
    TaskDescriptor t;
    t.kind = TaskKind::QA;
    t.query = ex.question;
    t.reference.qa_answer = ex.answer;
    return t;
}

inline SourceDocument dst_source(const DstExample& ex) {
    SourceDocument doc;
    for (const auto& [speaker, utterance] : ex.dialogue_turns) {
        std::string turn = speaker + ": " + utterance;
        doc.segments.push_back(turn);
        if (!doc.text.empty()) doc.text += "\n";
        doc.text += turn;
    }
    return doc;
}

inline TaskDescriptor dst_task(const DstExample& ex) {
    TaskDescriptor t;
    t.kind = TaskKind::DST;
    t.query = "Track the dialogue state as domain-slot=value records.";
    t.reference.dst_state = ex.gold_state;
    return t;
}

// Full SkillCom chain. Deterministic given (config.seed, provider backend).
// Provider call counts in the trace cover only this invocation.
inline std::pair<TaskOutput, PipelineTrace> run_skillcom(const SourceDocument& source,
                                                         const TaskDescriptor& task,
                                                         const PipelineConfig& config,
                                                         LlmProvider& provider) {
    PipelineTrace trace;
    detail::StageClock clock(trace);
    auto calls_before = provider.calls_by_role();

    // abstraction
    AbstractionConfig abs_cfg = config.abstraction;
    if (!config.ablation.llm_abstraction) abs_cfg.mode = AbstractionMode::Heuristic;
    trace.units_abstracted = clock.stage("abstraction", [&] {
        return abstract_units(source, task, provider, abs_cfg, &trace.warnings);
    });

    // transmission: rank -> (dedup) -> budget enforcement
    trace.selection = clock.stage("selection", [&] {
        if (!config.ablation.channel_aware)
            return source_order_select(trace.units_abstracted, config.budgets, config.weights,
                                       config.stop_mode);
        if (config.dedup_enabled && config.ablation.dedup) {
            auto ranked = detail::priority_order(trace.units_abstracted, config.weights);
            std::vector<SemanticUnit> ranked_units;
            for (auto* p : ranked) ranked_units.push_back(*p);
            auto deduped = dedup_units(ranked_units,
                                       config.dedup_uses_llm ? &provider : nullptr,
                                       config.dedup_threshold, &trace.warnings);
            std::vector<const SemanticUnit*> ordered;
            for (const auto& u : deduped) ordered.push_back(&u);
            return detail::enforce_budgets(ordered, config.budgets, config.weights,
                                           config.stop_mode);
        }
        return greedy_select(trace.units_abstracted, config.budgets, config.weights,
                             config.stop_mode);
    });
    auto selected_units = detail::units_by_ids(trace.units_abstracted, trace.selection.selected_ids);

    // channel
    trace.transmission =
        clock.stage("channel", [&] { return transmit(selected_units, config.channel, config.seed); });

    // repair
    auto missing = detect_erasures(trace.selection.selected_ids, trace.transmission);
    trace.repaired = clock.stage("repair", [&] {
        RepairStrategy strategy = config.ablation.repair ? config.repair : RepairStrategy::None;
        uint32_t max_id = 0;
        for (uint32_t id : trace.selection.selected_ids) max_id = std::max(max_id, id);
        switch (strategy) {
            case RepairStrategy::Generative:
                return generative_repair(trace.transmission.delivered, task, missing, provider,
                                         max_id, &trace.warnings);
            case RepairStrategy::Guided:
                return guided_repair(trace.transmission.delivered, task, missing, &trace.warnings);
            case RepairStrategy::None: {
                RepairedContext ctx;
                ctx.units = trace.transmission.delivered;
                ctx.missing_ids = missing;
                return ctx;
            }
        }
        throw std::logic_error("unreachable");
    });

    // execution
    trace.output =
        clock.stage("execution", [&] { return execute(trace.repaired, task, provider, &trace.warnings); });

    for (const auto& [role, n] : provider.calls_by_role()) {
        int before = calls_before.count(role) ? calls_before.at(role) : 0;
        if (n > before) trace.provider_calls[role] = n - before;
    }
    return {trace.output, trace};
}

namespace prompts {

inline constexpr const char* kMonoCompressSystem =
    "Compress the source into one short text block that preserves the facts needed for the "
    "task. Respect the stated token limit. Output only the block.";

inline std::string mono_compress_user(const SourceDocument& source, const TaskDescriptor& task,
                                      double max_tokens) {
    return "Task: " + task.query + "\nToken limit: " +
           std::to_string(static_cast<int>(max_tokens)) + "\nSource:\n" + source.text;
}

inline constexpr const char* kMonoDecodeQaSystem =
    "Answer the question from the context. Reply with the short answer on the first line, or "
    "UNKNOWN if the context is insufficient.";

inline constexpr const char* kMonoDecodeDstSystem =
    "From the context, output the dialogue state as one \"domain-slot=value\" record per "
    "line. Output nothing else.";

}  // namespace prompts

// Monolithic baseline: one compress call, one block through the same channel,
// one decode call (2 LLM calls total). An erased block reaches the decoder as
// an empty context.
inline std::pair<TaskOutput, PipelineTrace> run_monolithic(const SourceDocument& source,
                                                           const TaskDescriptor& task,
                                                           const PipelineConfig& config,
                                                           LlmProvider& provider) {
    PipelineTrace trace;
    detail::StageClock clock(trace);
    auto calls_before = provider.calls_by_role();

    // compress
    std::string block = clock.stage("compress", [&] {
        try {
            return provider
                .complete({"monolithic_compress", prompts::kMonoCompressSystem,
                           prompts::mono_compress_user(source, task, config.budgets.max_tokens),
                           static_cast<int>(config.budgets.max_tokens) + 16})
                .text;
        } catch (const ProviderError& e) {
            trace.warnings.push_back(std::string("compress provider failed: ") + e.what());
            return std::string();
        }
    });
    // character proxy for the token budget: 4 chars per token
    size_t max_chars = static_cast<size_t>(config.budgets.max_tokens * 4.0);
    if (block.size() > max_chars) block = block.substr(0, max_chars);

    SemanticUnit block_unit =
        make_unit(0, UnitType::Summary, block, 0.5, 0.5, config.monolithic_block_g);
    trace.units_abstracted = {block_unit};
    trace.selection.selected_ids = {0};
    trace.selection.total_tokens = block_unit.token_cost;
    trace.selection.total_chars = static_cast<int>(block_unit.char_length());

    trace.transmission = clock.stage("channel", [&] {
        return transmit({block_unit}, config.channel, config.seed);
    });
    bool delivered = trace.transmission.erased_ids.empty();

    trace.repaired.units = trace.transmission.delivered;
    trace.repaired.missing_ids = detect_erasures({0}, trace.transmission);

    trace.output = clock.stage("decode", [&] {
        std::string context = delivered ? block : "";
        TaskOutput out;
        const char* system = task.kind == TaskKind::QA ? prompts::kMonoDecodeQaSystem
                                                       : prompts::kMonoDecodeDstSystem;
        std::string user = "Context: " + context + "\nTask: " + task.query + "\n";
        try {
            out.raw_reply = provider.complete({"monolithic_decode",
                                               system, user, 256}).text;
        } catch (const ProviderError& e) {
            trace.warnings.push_back(std::string("decode provider failed: ") + e.what());
            if (task.kind == TaskKind::QA)
                out.qa_answer = "";
            else
                out.dst_state = DialogueState{};
            return out;
        }
        if (task.kind == TaskKind::QA) {
            auto lines = split_lines(out.raw_reply);
            std::string ans = lines.empty() ? "" : trim(lines.front());
            if (ans == kAbstainToken || ans == kMockUnmatched) ans = "";
            out.qa_answer = ans;
        } else {
            DialogueState state;
            for (const auto& line : split_lines(out.raw_reply)) {
                auto triple = parse_slot_triple(trim(line));
                if (triple) state.insert(*triple);
            }
            out.dst_state = state;
        }
        return out;
    });

    for (const auto& [role, n] : provider.calls_by_role()) {
        int before = calls_before.count(role) ? calls_before.at(role) : 0;
        if (n > before) trace.provider_calls[role] = n - before;
    }
    return {trace.output, trace};
}

// Trace serialization for offline diagnosis (one JSON object per example).
// Timings are excluded to keep reports byte-deterministic.
inline nlohmann::ordered_json trace_to_json(const PipelineTrace& trace) {
    nlohmann::ordered_json j;
    auto unit_json = [](const SemanticUnit& u) {
        return nlohmann::ordered_json{{"id", u.id},
                                      {"type", unit_type_name(u.type)},
                                      {"payload", u.payload},
                                      {"r", u.relevance},
                                      {"s", u.importance},
                                      {"g", u.robustness},
                                      {"kappa", u.token_cost},
                                      {"synthetic", u.synthetic}};
    };
    j["units_abstracted"] = nlohmann::ordered_json::array();
    for (const auto& u : trace.units_abstracted) j["units_abstracted"].push_back(unit_json(u));
    j["selected_ids"] = trace.selection.selected_ids;
    j["selection_tokens"] = trace.selection.total_tokens;
    j["selection_chars"] = trace.selection.total_chars;
    j["selection_objective"] = trace.selection.objective;
    j["erased_ids"] = std::vector<uint32_t>(trace.transmission.erased_ids.begin(),
                                            trace.transmission.erased_ids.end());
    j["repaired_units"] = nlohmann::ordered_json::array();
    for (const auto& u : trace.repaired.units) j["repaired_units"].push_back(unit_json(u));
    if (trace.repaired.guidance) {
        nlohmann::ordered_json g;
        g["active_domains"] = std::vector<std::string>(
            trace.repaired.guidance->active_domains.begin(),
            trace.repaired.guidance->active_domains.end());
        g["confirmed_slots"] = nlohmann::ordered_json::array();
        for (const auto& t : trace.repaired.guidance->confirmed_slots)
            g["confirmed_slots"].push_back(format_slot_triple(t));
        j["guidance"] = g;
    }
    if (trace.output.qa_answer) j["qa_answer"] = *trace.output.qa_answer;
    if (trace.output.dst_state) {
        j["dst_state"] = nlohmann::ordered_json::array();
        for (const auto& t : *trace.output.dst_state) j["dst_state"].push_back(format_slot_triple(t));
    }
    j["warnings"] = trace.warnings;
    j["provider_calls"] = trace.provider_calls;
    return j;
}

}  // namespace skillcom
