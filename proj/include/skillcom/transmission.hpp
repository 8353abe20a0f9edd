#pragma once
// Channel-adaptive transmission skill: priority scoring, budget-constrained
// greedy selection with an exhaustive oracle, and semantic deduplication.

#include <algorithm>
#include <cstdint>
#include <regex>
#include <string>
#include <vector>

#include "skillcom/core.hpp"
#include "skillcom/provider.hpp"
#include "skillcom/text.hpp"

namespace skillcom {

// w_j = alpha_r r + alpha_s s + alpha_g g - alpha_c kappa (no clamping)
inline double priority_score(const SemanticUnit& u, const PriorityWeights& w) {
    w.validate();
    return w.alpha_r * u.relevance + w.alpha_s * u.importance + w.alpha_g * u.robustness -
           w.alpha_c * u.token_cost;
}

enum class StopMode {
    StopAtFirstViolation,  // halt at the first unit whose addition violates a budget
    SkipInfeasible,        // skip it and keep scanning
};

struct SelectionOutcome {
    std::vector<uint32_t> selected_ids;  // in selection order
    double total_tokens = 0.0;
    int total_chars = 0;
    double objective = 0.0;  // sum of w_j over the selection
    std::vector<std::pair<uint32_t, std::string>> dropped;  // (id, reason)
};

namespace detail {

// greedy scan over an already-ordered unit list
inline SelectionOutcome enforce_budgets(const std::vector<const SemanticUnit*>& ordered,
                                        const BudgetTriple& budgets, const PriorityWeights& weights,
                                        StopMode stop_mode) {
    budgets.validate();
    SelectionOutcome out;
    bool stopped = false;
    for (const SemanticUnit* u : ordered) {
        if (stopped) {
            out.dropped.emplace_back(u->id, "after_stop");
            continue;
        }
        std::string reason;
        if (static_cast<int>(out.selected_ids.size()) + 1 > budgets.max_units)
            reason = "unit_budget";
        else if (out.total_tokens + u->token_cost > budgets.max_tokens)
            reason = "token_budget";
        else if (out.total_chars + static_cast<int>(u->char_length()) > budgets.max_chars)
            reason = "char_budget";
        if (reason.empty()) {
            out.selected_ids.push_back(u->id);
            out.total_tokens += u->token_cost;
            out.total_chars += static_cast<int>(u->char_length());
            out.objective += priority_score(*u, weights);
        } else {
            out.dropped.emplace_back(u->id, reason);
            if (stop_mode == StopMode::StopAtFirstViolation) stopped = true;
        }
    }
    return out;
}

inline std::vector<const SemanticUnit*> priority_order(const std::vector<SemanticUnit>& units,
                                                       const PriorityWeights& weights) {
    std::vector<const SemanticUnit*> ordered;
    ordered.reserve(units.size());
    for (const auto& u : units) ordered.push_back(&u);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [&](const SemanticUnit* a, const SemanticUnit* b) {
                         double wa = priority_score(*a, weights), wb = priority_score(*b, weights);
                         return wa != wb ? wa > wb : a->id < b->id;  // id tie-break
                     });
    return ordered;
}

}  // namespace detail

// Rank by w_j descending (id ascending on ties), then add units until a
// budget would be exceeded.
inline SelectionOutcome greedy_select(const std::vector<SemanticUnit>& units,
                                      const BudgetTriple& budgets, const PriorityWeights& weights,
                                      StopMode stop_mode = StopMode::StopAtFirstViolation) {
    validate_units(units);
    return detail::enforce_budgets(detail::priority_order(units, weights), budgets, weights,
                                   stop_mode);
}

// budgets enforced over source (id) order; used by the channel-aware-off
// ablation
inline SelectionOutcome source_order_select(const std::vector<SemanticUnit>& units,
                                            const BudgetTriple& budgets,
                                            const PriorityWeights& weights, StopMode stop_mode) {
    validate_units(units);
    std::vector<const SemanticUnit*> ordered;
    for (const auto& u : units) ordered.push_back(&u);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const SemanticUnit* a, const SemanticUnit* b) { return a->id < b->id; });
    return detail::enforce_budgets(ordered, budgets, weights, stop_mode);
}

// Exhaustive oracle over all feasible subsets (|units| <= 20). Ties broken by
// lexicographically smallest id set.
inline SelectionOutcome brute_force_select(const std::vector<SemanticUnit>& units,
                                           const BudgetTriple& budgets,
                                           const PriorityWeights& weights) {
    validate_units(units);
    budgets.validate();
    if (units.size() > 20) throw std::invalid_argument("brute_force_select: > 20 units");

    auto ids_of = [&](uint32_t mask) {
        std::vector<uint32_t> ids;
        for (size_t i = 0; i < units.size(); ++i)
            if (mask & (1u << i)) ids.push_back(units[i].id);
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    uint32_t best_mask = 0;
    double best_obj = 0.0;
    bool have_best = true;  // empty set is always feasible with objective 0
    for (uint32_t mask = 1; mask < (1u << units.size()); ++mask) {
        int count = 0, chars = 0;
        double tokens = 0.0, obj = 0.0;
        for (size_t i = 0; i < units.size(); ++i) {
            if (!(mask & (1u << i))) continue;
            ++count;
            tokens += units[i].token_cost;
            chars += static_cast<int>(units[i].char_length());
            obj += priority_score(units[i], weights);
        }
        if (count > budgets.max_units || tokens > budgets.max_tokens || chars > budgets.max_chars)
            continue;
        if (!have_best || obj > best_obj ||
            (obj == best_obj && ids_of(mask) < ids_of(best_mask))) {
            best_mask = mask;
            best_obj = obj;
            have_best = true;
        }
    }

    SelectionOutcome out;
    for (size_t i = 0; i < units.size(); ++i) {
        if (best_mask & (1u << i)) {
            out.selected_ids.push_back(units[i].id);
            out.total_tokens += units[i].token_cost;
            out.total_chars += static_cast<int>(units[i].char_length());
            out.objective += priority_score(units[i], weights);
        } else {
            out.dropped.emplace_back(units[i].id, "not_in_optimum");
        }
    }
    std::sort(out.selected_ids.begin(), out.selected_ids.end());
    return out;
}

namespace prompts {

inline constexpr const char* kDedupSystem =
    "You remove redundant semantic units. Reply with one line: the comma-separated ids of "
    "the units to KEEP, preferring earlier (higher-priority) units.";

inline std::string dedup_user(const std::vector<SemanticUnit>& units) {
    std::string s = "Units (priority order):\n";
    std::string ids;
    for (const auto& u : units) {
        s += std::to_string(u.id) + ": " + u.payload + "\n";
        if (!ids.empty()) ids += ",";
        ids += std::to_string(u.id);
    }
    s += "ids: " + ids + "\n";
    return s;
}

}  // namespace prompts

// Semantic deduplication between ranking and final budget enforcement.
// Input must be in priority order; output preserves that order. Without a
// provider, a unit is dropped when its token-set Jaccard similarity with a
// higher-priority kept unit exceeds `threshold`.
inline std::vector<SemanticUnit> dedup_units(const std::vector<SemanticUnit>& units,
                                             LlmProvider* provider, double threshold,
                                             std::vector<std::string>* warnings = nullptr) {
    if (threshold < 0.0 || threshold > 1.0)
        throw std::invalid_argument("dedup threshold out of [0,1]");
    if (units.empty()) return {};

    if (provider) {
        try {
            std::string reply =
                provider->complete({"dedup", prompts::kDedupSystem, prompts::dedup_user(units), 128})
                    .text;
            std::set<uint32_t> keep;
            static const std::regex num(R"(\d+)");
            for (auto it = std::sregex_iterator(reply.begin(), reply.end(), num);
                 it != std::sregex_iterator(); ++it)
                keep.insert(static_cast<uint32_t>(std::stoul(it->str())));
            std::vector<SemanticUnit> out;
            for (const auto& u : units)  // hallucinated ids are ignored by intersection
                if (keep.count(u.id)) out.push_back(u);
            return out;
        } catch (const ProviderError& e) {
            if (warnings)
                warnings->push_back(std::string("dedup provider failed, Jaccard fallback: ") +
                                    e.what());
        }
    }

    std::vector<SemanticUnit> kept;
    for (const auto& u : units) {
        bool dup = false;
        for (const auto& k : kept) {
            if (jaccard(u.payload, k.payload) > threshold) {
                dup = true;
                break;
            }
        }
        if (!dup) kept.push_back(u);
    }
    return kept;
}

}  // namespace skillcom
