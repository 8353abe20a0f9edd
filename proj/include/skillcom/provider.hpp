#pragma once
// LLM provider abstraction: one completion interface with a rule-based
// deterministic mock, an OpenAI-compatible HTTP client, and a persistent
// content-addressed response cache. Temperature is pinned to 0 by
// construction.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "skillcom/rng.hpp"

namespace skillcom {

inline const std::set<std::string>& known_role_tags() {
    static const std::set<std::string> tags = {
        "enrich", "extract", "dedup", "repair",
        "execute_qa", "execute_dst", "monolithic_compress", "monolithic_decode"};
    return tags;
}

struct CompletionRequest {
    std::string role_tag;  // which skill issued the call
    std::string system;
    std::string user;
    int max_reply_tokens = 256;
};

struct CompletionResponse {
    std::string text;
    bool cached = false;
    int latency_ms = 0;
};

class ProviderError : public std::runtime_error {
  public:
    explicit ProviderError(const std::string& what) : std::runtime_error(what) {}
};

class LlmProvider {
  public:
    virtual ~LlmProvider() = default;

    CompletionResponse complete(const CompletionRequest& req) {
        if (!known_role_tags().count(req.role_tag))
            throw std::invalid_argument("unknown role_tag: " + req.role_tag);
        if (req.max_reply_tokens <= 0)
            throw std::invalid_argument("max_reply_tokens must be positive");
        {
            std::lock_guard<std::mutex> lk(counter_mutex_);
            ++calls_by_role_[req.role_tag];
        }
        return do_complete(req);
    }

    std::map<std::string, int> calls_by_role() const {
        std::lock_guard<std::mutex> lk(counter_mutex_);
        return calls_by_role_;
    }

    int total_calls() const {
        std::lock_guard<std::mutex> lk(counter_mutex_);
        int n = 0;
        for (const auto& [_, c] : calls_by_role_) n += c;
        return n;
    }

    void reset_counters() {
        std::lock_guard<std::mutex> lk(counter_mutex_);
        calls_by_role_.clear();
    }

    virtual int network_calls() const { return 0; }

  protected:
    virtual CompletionResponse do_complete(const CompletionRequest& req) = 0;

  private:
    mutable std::mutex counter_mutex_;
    std::map<std::string, int> calls_by_role_;
};

// ---- mock ------------------------------------------------------------------

inline constexpr const char* kMockUnmatched = "MOCK:UNMATCHED";

// First matching rule wins. Matchers run over the user prompt: either a
// literal substring or an ECMAScript regex; regex templates may splice
// capture groups with $1, $2, ...
struct MockRule {
    std::string role_tag;  // empty = any role
    std::string pattern;
    bool is_regex = false;
    std::string reply;
};

class MockProvider : public LlmProvider {
  public:
    MockProvider() = default;
    explicit MockProvider(std::vector<MockRule> rules) : rules_(std::move(rules)) {}

    void add_rule(MockRule rule) { rules_.push_back(std::move(rule)); }

    // simulate a transient provider failure on specific role tags
    void fail_roles(std::set<std::string> roles) { fail_roles_ = std::move(roles); }

  protected:
    CompletionResponse do_complete(const CompletionRequest& req) override {
        if (fail_roles_.count(req.role_tag))
            throw ProviderError("mock failure for role " + req.role_tag);
        for (const auto& rule : rules_) {
            if (!rule.role_tag.empty() && rule.role_tag != req.role_tag) continue;
            if (rule.is_regex) {
                std::smatch m;
                if (std::regex_search(req.user, m, std::regex(rule.pattern)))
                    return {m.format(rule.reply), false, 0};
            } else if (req.user.find(rule.pattern) != std::string::npos) {
                return {rule.reply, false, 0};
            }
        }
        return {kMockUnmatched, false, 0};
    }

  private:
    std::vector<MockRule> rules_;
    std::set<std::string> fail_roles_;
};

// ---- disk cache ------------------------------------------------------------

// 128-bit content hash (two keyed FNV-1a passes), hex encoded
inline std::string content_hash(const std::string& s) {
    auto fnv = [](const std::string& data, uint64_t basis) {
        uint64_t h = basis;
        for (unsigned char c : data) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    };
    uint64_t a = mix64(fnv(s, 0xcbf29ce484222325ULL));
    uint64_t b = mix64(fnv(s, 0x9ae16a3b2f90404fULL));
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                  static_cast<unsigned long long>(a), static_cast<unsigned long long>(b));
    return buf;
}

// Wraps another provider with an append-only, content-addressed disk cache.
// Key = hash(role_tag, system, user, model id). Cached replies are returned
// byte-identical; writes are idempotent so last-write-wins is safe.
class CachingProvider : public LlmProvider {
  public:
    CachingProvider(LlmProvider& inner, std::filesystem::path cache_dir, std::string model_id)
        : inner_(inner), dir_(std::move(cache_dir)), model_id_(std::move(model_id)) {
        std::filesystem::create_directories(dir_);
    }

    int network_calls() const override { return inner_.network_calls(); }
    int cache_hits() const { return hits_; }
    int cache_misses() const { return misses_; }

  protected:
    CompletionResponse do_complete(const CompletionRequest& req) override {
        std::string key = content_hash(req.role_tag + "\x1f" + req.system + "\x1f" +
                                       req.user + "\x1f" + model_id_);
        auto path = dir_ / (key + ".json");
        {
            std::lock_guard<std::mutex> lk(mutex_);
            std::ifstream in(path);
            if (in) {
                nlohmann::json j = nlohmann::json::parse(in);
                ++hits_;
                return {j.at("text").get<std::string>(), true, 0};
            }
        }
        CompletionResponse resp = inner_.complete(req);
        nlohmann::json j{{"role_tag", req.role_tag},
                         {"system", req.system},
                         {"user", req.user},
                         {"model", model_id_},
                         {"text", resp.text}};
        {
            std::lock_guard<std::mutex> lk(mutex_);
            ++misses_;
            std::ofstream out(path);
            out << j.dump(2) << "\n";
            std::ofstream idx(dir_ / "index.jsonl", std::ios::app);
            idx << nlohmann::json{{"key", key},
                                  {"role_tag", req.role_tag},
                                  {"reply_bytes", resp.text.size()}}
                       .dump()
                << "\n";
        }
        resp.cached = false;
        return resp;
    }

  private:
    LlmProvider& inner_;
    std::filesystem::path dir_;
    std::string model_id_;
    std::mutex mutex_;
    int hits_ = 0;
    int misses_ = 0;
};

}  // namespace skillcom
