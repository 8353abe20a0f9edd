#pragma once
// Task execution skill: repaired semantic context -> task output via one
// task-conditioned LLM call. Takes the same repaired-unit interface from any
// upstream realization.

#include <optional>
#include <string>
#include <vector>

#include "skillcom/core.hpp"
#include "skillcom/provider.hpp"
#include "skillcom/repair.hpp"

namespace skillcom {

inline constexpr const char* kAbstainToken = "UNKNOWN";

struct TaskOutput {
    std::optional<std::string> qa_answer;
    std::optional<DialogueState> dst_state;
    std::string raw_reply;  // provider reply kept for diagnostics
};

namespace prompts {

inline constexpr const char* kExecQaSystem =
    "You are the receiver of a semantic communication system. Answer the question using only "
    "the semantic units below. Reply with the short answer on the first line, or UNKNOWN if "
    "the units are insufficient.";

inline std::string exec_qa_user(const RepairedContext& ctx, const TaskDescriptor& task) {
    std::string s = "Question: " + task.query + "\nUnits:\n";
    for (const auto& u : ctx.units)
        s += std::string("[") + unit_type_name(u.type) + "] " + u.payload + "\n";
    return s;
}

inline constexpr const char* kExecDstSystem =
    "You are the receiver of a semantic communication system. From the dialogue units below, "
    "output the dialogue state as one \"domain-slot=value\" record per line. Output nothing "
    "else.";

inline std::string exec_dst_user(const RepairedContext& ctx, const TaskDescriptor& task) {
    std::string s = "Instruction: " + task.query + "\nUnits:\n";
    for (const auto& u : ctx.units)
        s += std::string("[") + unit_type_name(u.type) + "] " + u.payload + "\n";
    if (ctx.guidance) {
        s += "Guidance:\nactive domains:";
        for (const auto& d : ctx.guidance->active_domains) s += " " + d;
        s += "\nconfirmed:";
        for (const auto& t : ctx.guidance->confirmed_slots) s += " " + format_slot_triple(t);
        s += "\n";
    }
    return s;
}

}  // namespace prompts

// One provider call; the reply's trimmed first line is the answer, with the
// abstain token mapped to "". A call is issued even for an empty context.
inline TaskOutput execute_qa(const RepairedContext& ctx, const TaskDescriptor& task,
                             LlmProvider& provider, std::vector<std::string>* warnings = nullptr) {
    if (task.kind != TaskKind::QA) throw std::invalid_argument("execute_qa: task kind is not QA");
    TaskOutput out;
    try {
        out.raw_reply = provider
                            .complete({"execute_qa", prompts::kExecQaSystem,
                                       prompts::exec_qa_user(ctx, task), 64})
                            .text;
    } catch (const ProviderError& e) {
        if (warnings) warnings->push_back(std::string("execute_qa provider failed: ") + e.what());
        out.qa_answer = "";  // abstain
        return out;
    }
    auto lines = split_lines(out.raw_reply);
    std::string ans = lines.empty() ? "" : trim(lines.front());
    if (ans == kAbstainToken || ans == kMockUnmatched) ans = "";
    out.qa_answer = ans;
    return out;
}

// One provider call; reply parsed as newline-separated "domain-slot=value"
// records, canonicalized. Guidance slots are merged in and win on conflicts.
// Provider failure falls back to the guidance slots alone.
inline TaskOutput execute_dst(const RepairedContext& ctx, const TaskDescriptor& task,
                              LlmProvider& provider, std::vector<std::string>* warnings = nullptr) {
    if (task.kind != TaskKind::DST) throw std::invalid_argument("execute_dst: task kind is not DST");
    TaskOutput out;
    DialogueState state;
    bool provider_ok = true;
    try {
        out.raw_reply = provider
                            .complete({"execute_dst", prompts::kExecDstSystem,
                                       prompts::exec_dst_user(ctx, task), 256})
                            .text;
    } catch (const ProviderError& e) {
        if (warnings) warnings->push_back(std::string("execute_dst provider failed: ") + e.what());
        provider_ok = false;
    }
    if (provider_ok) {
        for (const auto& line : split_lines(out.raw_reply)) {
            std::string l = trim(line);
            if (l.empty() || l == kMockUnmatched) continue;
            auto triple = parse_slot_triple(l);
            if (!triple) {
                if (warnings) warnings->push_back("unparseable DST record skipped: " + l);
                continue;
            }
            state.insert(*triple);
        }
    }
    if (ctx.guidance) {
        // guidance wins: replace any predicted value for a confirmed (domain, slot)
        for (const auto& conf : ctx.guidance->confirmed_slots) {
            for (auto it = state.begin(); it != state.end();) {
                if (std::get<0>(*it) == std::get<0>(conf) && std::get<1>(*it) == std::get<1>(conf))
                    it = state.erase(it);
                else
                    ++it;
            }
            state.insert(conf);
        }
    }
    out.dst_state = state;
    return out;
}

inline TaskOutput execute(const RepairedContext& ctx, const TaskDescriptor& task,
                          LlmProvider& provider, std::vector<std::string>* warnings = nullptr) {
    return task.kind == TaskKind::QA ? execute_qa(ctx, task, provider, warnings)
                                     : execute_dst(ctx, task, provider, warnings);
}

}  // namespace skillcom
