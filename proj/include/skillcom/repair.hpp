#pragma once
// Receiver repair skill: erasure detection plus two strategies. Generative
// repair synthesizes replacement units via one LLM call; guided repair derives
// structured guidance (active domains, confirmed slots) without synthesizing
// anything.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "skillcom/channel.hpp"
#include "skillcom/core.hpp"
#include "skillcom/provider.hpp"

namespace skillcom {

struct StructuredGuidance {
    std::set<std::string> active_domains;
    DialogueState confirmed_slots;  // each triple parsed from a received SlotValue unit
};

struct RepairedContext {
    std::vector<SemanticUnit> units;  // received units unchanged, plus synthetics
    std::optional<StructuredGuidance> guidance;
    std::set<uint32_t> missing_ids;  // S_empty = S \ S_rx
};

// S_empty = selected \ received; a received id outside the selected set is a
// protocol error
inline std::set<uint32_t> detect_erasures(const std::vector<uint32_t>& selected_ids,
                                          const TransmissionResult& received) {
    std::set<uint32_t> selected(selected_ids.begin(), selected_ids.end());
    std::set<uint32_t> missing = selected;
    for (const auto& u : received.delivered) {
        if (!selected.count(u.id))
            throw std::runtime_error("protocol error: received id " + std::to_string(u.id) +
                                     " was never selected");
        missing.erase(u.id);
    }
    return missing;
}

namespace prompts {

inline constexpr const char* kRepairSystem =
    "Some transmitted semantic units were lost. Propose replacement units inferred from the "
    "received units and the task. Reply with at most the requested number of lines, each "
    "formatted as \"Type: payload\" where Type is Keyword, Entity, Evidence, SlotValue or "
    "Summary.";

inline std::string repair_user(const std::vector<SemanticUnit>& received,
                               const TaskDescriptor& task, size_t missing_count) {
    std::string s = "Task: " + task.query + "\nReceived units:\n";
    for (const auto& u : received)
        s += std::string("[") + unit_type_name(u.type) + "] " + u.payload + "\n";
    s += "Lost units: " + std::to_string(missing_count) + "\n";
    s += "Propose up to " + std::to_string(missing_count) + " replacements.\n";
    return s;
}

}  // namespace prompts

// Synthesizes at most |missing| replacement units via one provider call.
// Received units pass through byte-identical; provider failure degrades to
// the received set with a warning.
inline RepairedContext generative_repair(const std::vector<SemanticUnit>& received,
                                         const TaskDescriptor& task,
                                         const std::set<uint32_t>& missing, LlmProvider& provider,
                                         uint32_t max_transmitted_id,
                                         std::vector<std::string>* warnings = nullptr) {
    RepairedContext ctx;
    ctx.units = received;
    ctx.missing_ids = missing;
    if (missing.empty()) return ctx;  // nothing to repair, no provider call

    std::string reply;
    try {
        reply = provider
                    .complete({"repair", prompts::kRepairSystem,
                               prompts::repair_user(received, task, missing.size()), 256})
                    .text;
    } catch (const ProviderError& e) {
        if (warnings) warnings->push_back(std::string("repair provider failed: ") + e.what());
        return ctx;
    }

    uint32_t next_id = max_transmitted_id + 1;
    size_t added = 0;
    for (const auto& line : split_lines(reply)) {
        if (added >= missing.size()) break;
        std::string l = trim(line);
        size_t colon = l.find(':');
        if (colon == std::string::npos) continue;
        auto type = unit_type_from_name(trim(l.substr(0, colon)));
        std::string payload = trim(l.substr(colon + 1));
        if (!type || payload.empty()) continue;
        double prior = 0.5;
        switch (*type) {  // same defaults as the abstraction priors
            case UnitType::Keyword: prior = 0.9; break;
            case UnitType::Entity: prior = 0.8; break;
            case UnitType::SlotValue: prior = 0.8; break;
            case UnitType::Evidence: prior = 0.4; break;
            case UnitType::Summary: prior = 0.5; break;
        }
        ctx.units.push_back(make_unit(next_id++, *type, payload, 0.5, 0.5, prior,
                                      /*synthetic=*/true));
        ++added;
    }
    if (added == 0 && warnings)
        warnings->push_back("repair reply contained no parseable replacement units");
    return ctx;
}

// Derives guidance from received SlotValue payloads; never calls a provider
// and never adds units.
inline RepairedContext guided_repair(const std::vector<SemanticUnit>& received,
                                     const TaskDescriptor& task,
                                     const std::set<uint32_t>& missing,
                                     std::vector<std::string>* warnings = nullptr) {
    (void)task;
    RepairedContext ctx;
    ctx.units = received;
    ctx.missing_ids = missing;
    StructuredGuidance g;
    for (const auto& u : received) {
        if (u.type != UnitType::SlotValue) continue;
        auto triple = parse_slot_triple(u.payload);
        if (!triple) {
            if (warnings)
                warnings->push_back("unparseable SlotValue payload skipped: " + u.payload);
            continue;
        }
        g.active_domains.insert(std::get<0>(*triple));
        g.confirmed_slots.insert(*triple);
    }
    ctx.guidance = g;
    return ctx;
}

}  // namespace skillcom
