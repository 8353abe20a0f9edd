#pragma once
// Task utility metrics: EM and token-level F1 for QA (SQuAD normalization
// convention), joint goal accuracy and slot-level F1 for DST, plus run
// aggregation.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillcom/core.hpp"
#include "skillcom/execution.hpp"

namespace skillcom {

namespace detail {

// lowercase, strip punctuation, collapse whitespace; optionally drop the
// articles a/an/the (exact-match does, token F1 scores every token)
inline std::string normalize_text(const std::string& text, bool drop_articles) {
    std::string lowered;
    for (unsigned char c : text) {
        if (std::ispunct(c)) continue;
        lowered.push_back(static_cast<char>(std::tolower(c)));
    }
    std::vector<std::string> words;
    std::string cur;
    for (char c : lowered) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) words.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) words.push_back(cur);
    std::string out;
    for (const auto& w : words) {
        if (drop_articles && (w == "a" || w == "an" || w == "the")) continue;
        if (!out.empty()) out += " ";
        out += w;
    }
    return out;
}

}  // namespace detail

inline std::string normalize_answer(const std::string& text) {
    return detail::normalize_text(text, /*drop_articles=*/true);
}

inline int exact_match(const std::string& pred, const std::string& gold) {
    return normalize_answer(pred) == normalize_answer(gold) ? 1 : 0;
}

// harmonic mean of precision/recall over normalized token multisets;
// both empty -> 1, exactly one empty -> 0
inline double token_f1(const std::string& pred, const std::string& gold) {
    auto toks = [](const std::string& s) {
        std::map<std::string, int> counts;
        std::string norm = detail::normalize_text(s, /*drop_articles=*/false);
        std::string cur;
        for (char c : norm + " ") {
            if (c == ' ') {
                if (!cur.empty()) ++counts[cur];
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        return counts;
    };
    auto p = toks(pred), g = toks(gold);
    size_t np = 0, ng = 0, common = 0;
    for (const auto& [t, c] : p) np += c;
    for (const auto& [t, c] : g) ng += c;
    if (np == 0 && ng == 0) return 1.0;
    if (np == 0 || ng == 0) return 0.0;
    for (const auto& [t, c] : p) {
        auto it = g.find(t);
        if (it != g.end()) common += std::min(c, it->second);
    }
    if (common == 0) return 0.0;
    double prec = static_cast<double>(common) / np;
    double rec = static_cast<double>(common) / ng;
    return 2.0 * prec * rec / (prec + rec);
}

// 1 iff the canonicalized triple sets are exactly equal (both empty counts)
inline int joint_goal_accuracy(const DialogueState& pred, const DialogueState& gold) {
    return pred == gold ? 1 : 0;
}

inline double slot_f1(const DialogueState& pred, const DialogueState& gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    if (pred.empty() || gold.empty()) return 0.0;
    size_t common = 0;
    for (const auto& t : pred)
        if (gold.count(t)) ++common;
    if (common == 0) return 0.0;
    double prec = static_cast<double>(common) / pred.size();
    double rec = static_cast<double>(common) / gold.size();
    return 2.0 * prec * rec / (prec + rec);
}

struct SampleResult {
    std::string example_id;
    TaskKind kind = TaskKind::QA;
    TaskOutput task_output;
    ReferenceOutput reference;
    std::optional<int> em;
    std::optional<double> token_f1_score;
    std::optional<int> jga;
    std::optional<double> slot_f1_score;
    double tx_tokens = 0.0;  // sum of kappa over the selected set (pre-erasure)
    int llm_calls = 0;
    double delivered_unit_fraction = 1.0;
};

// scores one sample against its reference
inline SampleResult score_sample(const std::string& example_id, TaskKind kind,
                                 const TaskOutput& output, const ReferenceOutput& reference) {
    SampleResult r;
    r.example_id = example_id;
    r.kind = kind;
    r.task_output = output;
    r.reference = reference;
    if (kind == TaskKind::QA) {
        std::string pred = output.qa_answer.value_or("");
        std::string gold = reference.qa_answer.value_or("");
        r.em = exact_match(pred, gold);
        r.token_f1_score = token_f1(pred, gold);
    } else {
        DialogueState pred = output.dst_state.value_or(DialogueState{});
        DialogueState gold = reference.dst_state.value_or(DialogueState{});
        r.jga = joint_goal_accuracy(pred, gold);
        r.slot_f1_score = slot_f1(pred, gold);
    }
    return r;
}

struct RunSummary {
    TaskKind kind = TaskKind::QA;
    int count = 0;
    std::optional<double> mean_em;
    std::optional<double> mean_token_f1;
    std::optional<double> mean_jga;
    std::optional<double> mean_slot_f1;
    double mean_tx_tokens = 0.0;
    double mean_llm_calls = 0.0;
    double mean_delivered_fraction = 0.0;
};

inline RunSummary aggregate(const std::vector<SampleResult>& results) {
    if (results.empty()) throw std::invalid_argument("aggregate: empty result list");
    RunSummary s;
    s.kind = results.front().kind;
    s.count = static_cast<int>(results.size());
    double em = 0, f1 = 0, jga = 0, sf1 = 0, tx = 0, calls = 0, frac = 0;
    for (const auto& r : results) {
        if (r.kind != s.kind) throw std::invalid_argument("aggregate: mixed task kinds");
        if (r.em) em += *r.em;
        if (r.token_f1_score) f1 += *r.token_f1_score;
        if (r.jga) jga += *r.jga;
        if (r.slot_f1_score) sf1 += *r.slot_f1_score;
        tx += r.tx_tokens;
        calls += r.llm_calls;
        frac += r.delivered_unit_fraction;
    }
    double n = static_cast<double>(s.count);
    if (s.kind == TaskKind::QA) {
        s.mean_em = em / n;
        s.mean_token_f1 = f1 / n;
    } else {
        s.mean_jga = jga / n;
        s.mean_slot_f1 = sf1 / n;
    }
    s.mean_tx_tokens = tx / n;
    s.mean_llm_calls = calls / n;
    s.mean_delivered_fraction = frac / n;
    return s;
}

}  // namespace skillcom
