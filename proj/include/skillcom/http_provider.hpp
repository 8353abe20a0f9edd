#pragma once
// OpenAI-compatible chat-completion HTTP backend. Kept in its own header so
// offline builds of the library and tests do not pull in the HTTP client.

#include <chrono>
#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "skillcom/provider.hpp"

namespace skillcom {

struct HttpProviderConfig {
    std::string base_url = "https://api.deepseek.com";
    std::string model = "deepseek-chat";
    std::string api_key_env = "SKILLCOM_API_KEY";
    int timeout_sec = 60;
};

class HttpProvider : public LlmProvider {
  public:
    explicit HttpProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {}

    int network_calls() const override { return network_calls_; }

    const std::string& model_id() const { return cfg_.model; }

  protected:
    CompletionResponse do_complete(const CompletionRequest& req) override {
        const char* key = std::getenv(cfg_.api_key_env.c_str());
        if (!key) throw ProviderError("API key env var not set: " + cfg_.api_key_env);

        nlohmann::json body{
            {"model", cfg_.model},
            {"temperature", 0},
            {"max_tokens", req.max_reply_tokens},
            {"messages",
             {{{"role", "system"}, {"content", req.system}},
              {{"role", "user"}, {"content", req.user}}}}};

        httplib::Client cli(cfg_.base_url);
        cli.set_read_timeout(cfg_.timeout_sec, 0);
        cli.set_connection_timeout(cfg_.timeout_sec, 0);
        httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

        ++network_calls_;
        auto t0 = std::chrono::steady_clock::now();
        auto res = cli.Post("/chat/completions", headers, body.dump(), "application/json");
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
        if (!res) throw ProviderError("HTTP request failed: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw ProviderError("HTTP status " + std::to_string(res->status) + ": " + res->body);
        try {
            nlohmann::json j = nlohmann::json::parse(res->body);
            return {j.at("choices").at(0).at("message").at("content").get<std::string>(), false,
                    static_cast<int>(ms)};
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("malformed completion response: ") + e.what());
        }
    }

  private:
    HttpProviderConfig cfg_;
    int network_calls_ = 0;
};

}  // namespace skillcom
