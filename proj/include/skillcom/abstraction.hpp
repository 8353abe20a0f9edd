#pragma once
// Semantic abstraction skill: source text + task -> typed semantic units.
// Three interchangeable realizations: pure heuristic (no LLM), heuristic
// enriched by one LLM call, and schema-constrained LLM extraction. All emit
// the same six-field unit interface.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "skillcom/core.hpp"
#include "skillcom/provider.hpp"
#include "skillcom/text.hpp"

namespace skillcom {

enum class AbstractionMode { Heuristic, LlmEnriched, StructuredLlm };

inline const char* abstraction_mode_name(AbstractionMode m) {
    switch (m) {
        case AbstractionMode::Heuristic: return "heuristic";
        case AbstractionMode::LlmEnriched: return "llm_enriched";
        case AbstractionMode::StructuredLlm: return "structured_llm";
    }
    return "?";
}

// surface pattern mapping a dialogue turn to a (domain, slot) with the value
// in capture group `value_group`
struct SlotPattern {
    std::string domain;
    std::string slot;
    std::string pattern;
    int value_group = 1;
};

inline std::vector<SlotPattern> default_slot_patterns() {
    return {
        {"hotel", "pricerange", R"(\b(cheap|expensive|moderate(?:ly priced)?)\b.*\b(?:hotel|guest\s?house|place to stay))", 1},
        {"hotel", "area", R"((?:hotel|guest\s?house|place to stay)\b.*\bin the (north|south|east|west|centre|center))", 1},
        {"hotel", "stars", R"(\b(\d)[- ]star\b.*\b(?:hotel|guest\s?house))", 1},
        {"hotel", "parking", R"(\bhotel\b.*\b(free parking)\b)", 1},
        {"restaurant", "food", R"(\b(italian|chinese|indian|british|french|thai|mexican|european|turkish|korean)\b.*\b(?:food|restaurant|place to eat))", 1},
        {"restaurant", "pricerange", R"(\b(cheap|expensive|moderate(?:ly priced)?)\b.*\b(?:restaurant|place to eat))", 1},
        {"restaurant", "area", R"((?:restaurant|place to eat)\b.*\bin the (north|south|east|west|centre|center))", 1},
        {"train", "day", R"(\btrain\b.*\bon (monday|tuesday|wednesday|thursday|friday|saturday|sunday)\b)", 1},
        {"train", "departure", R"(\btrain\b.*\bfrom ([a-z]+)\b)", 1},
        {"train", "destination", R"(\btrain\b.*\bto ([a-z]+)\b)", 1},
    };
}

struct AbstractionConfig {
    AbstractionMode mode = AbstractionMode::Heuristic;
    int max_candidate_units = 24;
    std::map<UnitType, double> robustness_prior = {
        {UnitType::Keyword, 0.9},  {UnitType::Entity, 0.8},  {UnitType::SlotValue, 0.8},
        {UnitType::Evidence, 0.4}, {UnitType::Summary, 0.5},
    };
    double length_penalty = 0.2;  // g = prior - penalty * bytes/256, clamped
    int max_keywords = 5;
    std::vector<SlotPattern> slot_patterns = default_slot_patterns();
};

struct SourceDocument {
    std::string text;
    std::vector<std::string> segments;  // optional pre-split (paragraphs / turns)

    std::vector<std::string> effective_segments(TaskKind kind) const {
        if (!segments.empty()) return segments;
        if (kind == TaskKind::DST) {
            auto lines = split_lines(text);
            std::vector<std::string> out;
            for (auto& l : lines)
                if (!trim(l).empty()) out.push_back(trim(l));
            return out;
        }
        return split_sentences(text);
    }
};

namespace detail {

inline bool is_stopword(const std::string& t) {
    static const std::set<std::string> stop = {
        "a", "an", "the", "is", "are", "was", "were", "be", "been", "in", "on", "at", "of",
        "to", "for", "and", "or", "it", "its", "this", "that", "with", "as", "by", "i",
        "you", "he", "she", "we", "they", "do", "does", "did", "what", "which", "who",
        "when", "where", "how", "need", "want", "would", "like", "please"};
    return stop.count(t) > 0;
}

struct TfidfModel {
    std::map<std::string, double> idf;  // smoothed
    size_t num_segments = 0;

    static TfidfModel fit(const std::vector<std::string>& segments) {
        TfidfModel m;
        m.num_segments = segments.size();
        std::map<std::string, size_t> df;
        for (const auto& seg : segments)
            for (const auto& t : token_set(seg)) ++df[t];
        for (const auto& [t, d] : df)
            m.idf[t] = std::log((1.0 + segments.size()) / (1.0 + d)) + 1.0;
        return m;
    }

    double idf_of(const std::string& t) const {
        auto it = idf.find(t);
        if (it != idf.end()) return it->second;
        return std::log(1.0 + num_segments) + 1.0;  // unseen token
    }
};

}  // namespace detail

// Per-segment mean token TF-IDF, min-max normalized to [0,1] across segments.
// Degenerate spread (single segment / all equal) maps to 0.
inline std::map<size_t, double> tfidf_salience(const std::vector<std::string>& segments) {
    if (segments.empty()) throw std::invalid_argument("tfidf_salience requires >= 1 segment");
    auto model = detail::TfidfModel::fit(segments);
    std::vector<double> raw(segments.size(), 0.0);
    for (size_t i = 0; i < segments.size(); ++i) {
        auto toks = tokenize(segments[i]);
        if (toks.empty()) continue;
        std::map<std::string, int> tf;
        for (const auto& t : toks) ++tf[t];
        double sum = 0.0;
        for (const auto& t : toks) sum += tf[t] * model.idf_of(t);
        raw[i] = sum / static_cast<double>(toks.size());
    }
    double lo = *std::min_element(raw.begin(), raw.end());
    double hi = *std::max_element(raw.begin(), raw.end());
    std::map<size_t, double> out;
    for (size_t i = 0; i < raw.size(); ++i)
        out[i] = (hi > lo) ? (raw[i] - lo) / (hi - lo) : 0.0;
    return out;
}

namespace detail {

// r = IDF-weighted token overlap between payload and the task query
inline double query_relevance(const std::string& payload, const std::string& query,
                              const TfidfModel& model) {
    auto q = token_set(query);
    if (q.empty()) return 0.0;
    auto p = token_set(payload);
    double num = 0.0, den = 0.0;
    for (const auto& t : q) {
        double w = model.idf_of(t);
        den += w;
        if (p.count(t)) num += w;
    }
    return den > 0.0 ? num / den : 0.0;
}

inline double robustness_for(const AbstractionConfig& cfg, UnitType type,
                             const std::string& payload) {
    double prior = 0.5;
    auto it = cfg.robustness_prior.find(type);
    if (it != cfg.robustness_prior.end()) prior = it->second;
    double g = prior - cfg.length_penalty * (static_cast<double>(payload.size()) / 256.0);
    return std::clamp(g, 0.0, 1.0);
}

// capitalized multi-token spans plus standalone numeric tokens
inline std::vector<std::string> entity_spans(const std::string& sentence) {
    std::vector<std::string> out;
    static const std::regex cap(R"((?:\b[A-Z][a-zA-Z]+\b(?:\s+[A-Z][a-zA-Z]+\b)+))");
    static const std::regex num(R"(\b\d{2,4}(?:[-/]\d{1,4})*\b)");
    for (auto it = std::sregex_iterator(sentence.begin(), sentence.end(), cap);
         it != std::sregex_iterator(); ++it)
        out.push_back(it->str());
    for (auto it = std::sregex_iterator(sentence.begin(), sentence.end(), num);
         it != std::sregex_iterator(); ++it)
        out.push_back(it->str());
    return out;
}

}  // namespace detail

// Deterministic, LLM-free abstraction. QA: Evidence units per sentence plus
// Entity and Keyword candidates. DST: SlotValue units from the pattern table
// plus Keyword candidates.
inline std::vector<SemanticUnit> heuristic_abstract(const SourceDocument& source,
                                                    const TaskDescriptor& task,
                                                    const AbstractionConfig& config) {
    auto segments = source.effective_segments(task.kind);
    if (segments.empty()) return {};
    auto salience = tfidf_salience(segments);
    auto model = detail::TfidfModel::fit(segments);

    struct Candidate {
        UnitType type;
        std::string payload;
        size_t origin;
    };
    std::vector<Candidate> cands;

    if (task.kind == TaskKind::QA) {
        for (size_t i = 0; i < segments.size(); ++i)
            cands.push_back({UnitType::Evidence, segments[i], i});
        std::set<std::string> seen_entities;
        for (size_t i = 0; i < segments.size(); ++i)
            for (const auto& span : detail::entity_spans(segments[i]))
                if (seen_entities.insert(to_lower(span)).second)
                    cands.push_back({UnitType::Entity, span, i});
    } else {
        std::set<std::string> seen_slots;
        for (size_t i = 0; i < segments.size(); ++i) {
            std::string turn = to_lower(segments[i]);
            for (const auto& sp : config.slot_patterns) {
                std::smatch m;
                if (std::regex_search(turn, m, std::regex(sp.pattern))) {
                    std::string value = m[sp.value_group].str();
                    std::string payload = sp.domain + "-" + sp.slot + "=" + value;
                    if (seen_slots.insert(payload).second)
                        cands.push_back({UnitType::SlotValue, payload, i});
                }
            }
        }
    }

    // top-TF-IDF keywords across the whole source
    std::map<std::string, double> kw_score;
    std::map<std::string, size_t> kw_origin;
    for (size_t i = 0; i < segments.size(); ++i) {
        std::map<std::string, int> tf;
        for (const auto& t : tokenize(segments[i])) ++tf[t];
        for (const auto& [t, c] : tf) {
            if (detail::is_stopword(t) || t.size() < 3) continue;
            double sc = c * model.idf_of(t);
            if (sc > kw_score[t]) {
                kw_score[t] = sc;
                kw_origin[t] = i;
            }
        }
    }
    std::vector<std::pair<std::string, double>> kws(kw_score.begin(), kw_score.end());
    std::sort(kws.begin(), kws.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    for (int k = 0; k < config.max_keywords && k < static_cast<int>(kws.size()); ++k)
        cands.push_back({UnitType::Keyword, kws[k].first, kw_origin[kws[k].first]});

    std::vector<SemanticUnit> units;
    for (const auto& c : cands) {
        if (static_cast<int>(units.size()) >= config.max_candidate_units) break;
        units.push_back(make_unit(static_cast<uint32_t>(units.size()), c.type, c.payload,
                                  detail::query_relevance(c.payload, task.query, model),
                                  salience.at(c.origin),
                                  detail::robustness_for(config, c.type, c.payload)));
    }
    validate_units(units);
    return units;
}

namespace prompts {

inline constexpr const char* kEnrichSystem =
    "You enrich extracted context with keywords, entities and a concise summary. "
    "Reply with exactly three lines:\n"
    "KEYWORDS: comma-separated keywords\n"
    "ENTITIES: comma-separated named entities\n"
    "SUMMARY: one short sentence";

inline std::string enrich_user(const SourceDocument& source, const TaskDescriptor& task) {
    return "Task: " + task.query + "\nSource:\n" + source.text;
}

// documented schema for structured extraction; any provider can be prompted
// identically
inline constexpr const char* kExtractSystem =
    "Extract semantic units from the source as a JSON array. Each element must be an "
    "object with fields: \"type\" (one of keyword, entity, evidence, slot_value, summary), "
    "\"payload\" (string), \"relevance\" (number in [0,1], clamped), "
    "\"importance\" (number in [0,1], clamped). Output only the JSON array.";

inline std::string extract_user(const SourceDocument& source, const TaskDescriptor& task) {
    return "Task: " + task.query + "\nSource:\n" + source.text;
}

}  // namespace prompts

// Heuristic output plus Keyword/Entity/Summary units parsed from one provider
// call. Provider failure or an unparseable reply falls back to the heuristic
// output with a warning.
inline std::vector<SemanticUnit> llm_enrich(const SourceDocument& source,
                                            const TaskDescriptor& task, LlmProvider& provider,
                                            const AbstractionConfig& config,
                                            std::vector<std::string>* warnings = nullptr) {
    auto base = heuristic_abstract(source, task, config);
    if (base.empty()) return base;  // empty source: no provider call

    std::string reply;
    try {
        reply = provider
                    .complete({"enrich", prompts::kEnrichSystem,
                               prompts::enrich_user(source, task), 256})
                    .text;
    } catch (const ProviderError& e) {
        if (warnings) warnings->push_back(std::string("enrich provider failed: ") + e.what());
        return base;
    }

    auto segments = source.effective_segments(task.kind);
    auto model = detail::TfidfModel::fit(segments);
    struct Extra {
        UnitType type;
        std::string payload;
    };
    std::vector<Extra> extras;
    for (const auto& line : split_lines(reply)) {
        auto grab = [&](const char* prefix, UnitType type, bool split_commas) {
            std::string l = trim(line);
            if (l.rfind(prefix, 0) != 0) return false;
            std::string rest = trim(l.substr(std::string(prefix).size()));
            if (rest.empty()) return true;
            if (split_commas) {
                size_t pos = 0;
                while (pos != std::string::npos) {
                    size_t comma = rest.find(',', pos);
                    std::string item = trim(rest.substr(
                        pos, comma == std::string::npos ? std::string::npos : comma - pos));
                    if (!item.empty()) extras.push_back({type, item});
                    pos = comma == std::string::npos ? comma : comma + 1;
                }
            } else {
                extras.push_back({type, rest});
            }
            return true;
        };
        if (grab("KEYWORDS:", UnitType::Keyword, true)) continue;
        if (grab("ENTITIES:", UnitType::Entity, true)) continue;
        grab("SUMMARY:", UnitType::Summary, false);
    }
    if (extras.empty() && reply == kMockUnmatched) {
        if (warnings) warnings->push_back("enrich reply unparseable; heuristic output kept");
        return base;
    }

    std::vector<SemanticUnit> units = base;
    for (const auto& e : extras) {
        units.push_back(make_unit(static_cast<uint32_t>(units.size()), e.type, e.payload,
                                  detail::query_relevance(e.payload, task.query, model),
                                  0.5,  // mid-range source importance for generated content
                                  detail::robustness_for(config, e.type, e.payload)));
    }
    // re-sequence ids
    for (size_t i = 0; i < units.size(); ++i) units[i].id = static_cast<uint32_t>(i);
    validate_units(units);
    return units;
}

// One schema-constrained provider call; malformed elements are skipped with
// warnings, a fully unparseable reply falls back to heuristic_abstract.
inline std::vector<SemanticUnit> structured_extract(const SourceDocument& source,
                                                    const TaskDescriptor& task,
                                                    LlmProvider& provider,
                                                    const AbstractionConfig& config,
                                                    std::vector<std::string>* warnings = nullptr) {
    if (source.effective_segments(task.kind).empty()) return {};

    std::string reply;
    try {
        reply = provider
                    .complete({"extract", prompts::kExtractSystem,
                               prompts::extract_user(source, task), 512})
                    .text;
    } catch (const ProviderError& e) {
        if (warnings) warnings->push_back(std::string("extract provider failed: ") + e.what());
        return heuristic_abstract(source, task, config);
    }

    nlohmann::json arr;
    try {
        // tolerate prose around the array
        size_t b = reply.find('[');
        size_t e = reply.rfind(']');
        if (b == std::string::npos || e == std::string::npos || e < b)
            throw nlohmann::json::parse_error::create(101, 0, "no JSON array in reply", nullptr);
        arr = nlohmann::json::parse(reply.substr(b, e - b + 1));
        if (!arr.is_array()) throw std::runtime_error("reply is not an array");
    } catch (const std::exception& e) {
        if (warnings)
            warnings->push_back(std::string("extract reply unparseable (") + e.what() +
                                "); heuristic fallback");
        return heuristic_abstract(source, task, config);
    }

    std::vector<SemanticUnit> units;
    for (const auto& el : arr) {
        if (static_cast<int>(units.size()) >= config.max_candidate_units) break;
        if (!el.is_object() || !el.contains("type") || !el.contains("payload") ||
            !el["type"].is_string() || !el["payload"].is_string() ||
            el["payload"].get<std::string>().empty()) {
            if (warnings) warnings->push_back("extract element violates schema; skipped");
            continue;
        }
        auto type = unit_type_from_name(el["type"].get<std::string>());
        if (!type) {
            if (warnings)
                warnings->push_back("extract element has unknown type \"" +
                                    el["type"].get<std::string>() + "\"; skipped");
            continue;
        }
        auto num = [&](const char* field, double fallback) {
            if (!el.contains(field) || !el[field].is_number()) return fallback;
            return std::clamp(el[field].get<double>(), 0.0, 1.0);
        };
        std::string payload = el["payload"].get<std::string>();
        units.push_back(make_unit(static_cast<uint32_t>(units.size()), *type, payload,
                                  num("relevance", 0.5), num("importance", 0.5),
                                  detail::robustness_for(config, *type, payload)));
    }
    validate_units(units);
    return units;
}

// dispatch by configured mode
inline std::vector<SemanticUnit> abstract_units(const SourceDocument& source,
                                                const TaskDescriptor& task, LlmProvider& provider,
                                                const AbstractionConfig& config,
                                                std::vector<std::string>* warnings = nullptr) {
    switch (config.mode) {
        case AbstractionMode::Heuristic: return heuristic_abstract(source, task, config);
        case AbstractionMode::LlmEnriched: return llm_enrich(source, task, provider, config, warnings);
        case AbstractionMode::StructuredLlm:
            return structured_extract(source, task, provider, config, warnings);
    }
    return {};
}

}  // namespace skillcom
