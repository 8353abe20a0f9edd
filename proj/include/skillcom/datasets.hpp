#pragma once
// JSONL loaders for QA and DST examples, plus deterministic seeded sampling.
//
// QA record:  {"id": str, "question": str, "answer": str,
//              "context": [{"title": str, "sentences": [str, ...]}, ...]}
// DST record: {"id": str, "turns": [{"speaker": str, "utterance": str}, ...],
//              "state": [["domain", "slot", "value"], ...]}

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "skillcom/core.hpp"
#include "skillcom/rng.hpp"

namespace skillcom {

class DatasetError : public std::runtime_error {
  public:
    explicit DatasetError(const std::string& what) : std::runtime_error(what) {}
};

struct QaExample {
    std::string id;
    std::string question;
    std::vector<std::pair<std::string, std::vector<std::string>>> context_paragraphs;
    std::string answer;
};

struct DstExample {
    std::string id;
    std::vector<std::pair<std::string, std::string>> dialogue_turns;  // (speaker, utterance)
    DialogueState gold_state;
};

namespace detail {

inline nlohmann::json parse_line(const std::string& path, const std::string& line, int lineno) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(path + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
}

inline std::string require_string(const nlohmann::json& j, const char* field,
                                  const std::string& where) {
    if (!j.contains(field) || !j[field].is_string())
        throw DatasetError(where + ": missing or non-string field \"" + field + "\"");
    return j[field].get<std::string>();
}

}  // namespace detail

inline std::vector<QaExample> load_qa(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open " + path);
    std::vector<QaExample> out;
    std::set<std::string> ids;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::string where = path + ":" + std::to_string(lineno);
        auto j = detail::parse_line(path, line, lineno);
        QaExample ex;
        ex.id = detail::require_string(j, "id", where);
        ex.question = detail::require_string(j, "question", where);
        ex.answer = detail::require_string(j, "answer", where);
        if (ex.answer.empty()) throw DatasetError(where + ": empty answer");
        if (!j.contains("context") || !j["context"].is_array() || j["context"].empty())
            throw DatasetError(where + ": missing or empty \"context\" array");
        for (const auto& p : j["context"]) {
            if (!p.is_object() || !p.contains("title") || !p.contains("sentences") ||
                !p["sentences"].is_array())
                throw DatasetError(where + ": malformed context paragraph");
            std::vector<std::string> sents;
            for (const auto& s : p["sentences"]) {
                if (!s.is_string()) throw DatasetError(where + ": non-string sentence");
                sents.push_back(s.get<std::string>());
            }
            ex.context_paragraphs.emplace_back(p["title"].get<std::string>(), std::move(sents));
        }
        if (!ids.insert(ex.id).second) throw DatasetError(where + ": duplicate id " + ex.id);
        out.push_back(std::move(ex));
    }
    return out;
}

inline std::vector<DstExample> load_dst(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open " + path);
    std::vector<DstExample> out;
    std::set<std::string> ids;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::string where = path + ":" + std::to_string(lineno);
        auto j = detail::parse_line(path, line, lineno);
        DstExample ex;
        ex.id = detail::require_string(j, "id", where);
        if (!j.contains("turns") || !j["turns"].is_array() || j["turns"].empty())
            throw DatasetError(where + ": missing or empty \"turns\" array");
        for (const auto& t : j["turns"]) {
            if (!t.is_object())
                throw DatasetError(where + ": malformed turn");
            ex.dialogue_turns.emplace_back(detail::require_string(t, "speaker", where),
                                           detail::require_string(t, "utterance", where));
        }
        if (!j.contains("state") || !j["state"].is_array())
            throw DatasetError(where + ": missing \"state\" array");
        for (const auto& s : j["state"]) {
            if (!s.is_array() || s.size() != 3 || !s[0].is_string() || !s[1].is_string() ||
                !s[2].is_string())
                throw DatasetError(where + ": malformed state triple");
            std::string d = to_lower(trim(s[0].get<std::string>()));
            std::string sl = to_lower(trim(s[1].get<std::string>()));
            std::string v = to_lower(trim(s[2].get<std::string>()));
            if (d.empty() || sl.empty() || v.empty())
                throw DatasetError(where + ": empty component in state triple");
            ex.gold_state.insert({d, sl, v});
        }
        if (!ids.insert(ex.id).second) throw DatasetError(where + ": duplicate id " + ex.id);
        out.push_back(std::move(ex));
    }
    return out;
}

// Deterministic Fisher-Yates shuffle with the counter RNG, take first n.
// Stable across platforms; n must be in [1, |examples|].
template <typename T>
std::vector<T> sample(const std::vector<T>& examples, int n, uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("sample: n must be positive");
    if (n > static_cast<int>(examples.size()))
        throw std::invalid_argument("sample: n exceeds dataset size");
    std::vector<T> shuffled = examples;
    for (size_t i = shuffled.size(); i > 1; --i) {
        uint64_t j = rng_u64(seed, 1, i) % i;
        std::swap(shuffled[i - 1], shuffled[j]);
    }
    shuffled.resize(n);
    return shuffled;
}

}  // namespace skillcom
