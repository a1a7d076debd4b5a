#pragma once

// HTTP-backed providers. Kept out of gateway.hpp so mock-only code does not
// pay for httplib.

#include <cstdlib>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "ugc_sentinel/embedding.hpp"
#include "ugc_sentinel/error.hpp"
#include "ugc_sentinel/external_detector.hpp"
#include "ugc_sentinel/gateway.hpp"
#include "ugc_sentinel/net.hpp"

namespace ugcs {

namespace http_detail {

struct PostResult {
  int status = 0;       // 0 means transport-level failure
  std::string body;
  std::string error;
};

inline std::string bearer_from_env(const std::string& env_name) {
  const char* v = std::getenv(env_name.c_str());
  return v == nullptr ? std::string() : std::string(v);
}

inline PostResult post_json(const std::string& base_url,
                            const std::string& path,
                            const std::string& bearer,
                            const nlohmann::json& payload, int timeout_sec) {
  net::record_attempt();
  httplib::Client client(base_url);
  client.set_connection_timeout(timeout_sec);
  client.set_read_timeout(timeout_sec);
  httplib::Headers headers;
  if (!bearer.empty()) headers.insert({"Authorization", "Bearer " + bearer});
  auto res = client.Post(path, headers, payload.dump(), "application/json");
  if (!res) return {0, "", httplib::to_string(res.error())};
  return {res->status, res->body, ""};
}

}  // namespace http_detail

// OpenAI-compatible chat-completions endpoint: POST {model, messages,
// temperature, max_tokens}, bearer token from the environment.
struct HttpProviderConfig {
  std::string base_url;  // e.g. https://api.openai.com
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4-turbo";
  std::string api_key_env = "UGC_SENTINEL_API_KEY";
  int timeout_sec = 120;
};

class HttpChatProvider : public ChatProvider {
 public:
  explicit HttpChatProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty())
      throw ValidationError("HttpChatProvider: base_url required");
  }

  std::string id() const override { return "http:" + cfg_.model; }

  ProviderReply complete(const CompletionRequest& req,
                         const std::string& prompt) override {
    nlohmann::json payload = {
        {"model", cfg_.model},
        {"messages", {{{"role", "user"}, {"content", prompt}}}},
        {"temperature", req.decoding.temperature},
        {"max_tokens", req.decoding.max_tokens},
    };
    const auto bearer = http_detail::bearer_from_env(cfg_.api_key_env);
    const auto res = http_detail::post_json(cfg_.base_url, cfg_.path, bearer,
                                            payload, cfg_.timeout_sec);
    if (res.status == 0)
      return {ProviderReply::Status::transient, "", res.error};
    if (res.status == 401 || res.status == 403)
      return {ProviderReply::Status::auth, "", "HTTP " + std::to_string(res.status)};
    if (res.status == 408 || res.status == 429 || res.status >= 500)
      return {ProviderReply::Status::transient, "",
              "HTTP " + std::to_string(res.status)};
    if (res.status != 200)
      return {ProviderReply::Status::transient, "",
              "HTTP " + std::to_string(res.status) + ": " + res.body};

    nlohmann::json j = nlohmann::json::parse(res.body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty())
      return {ProviderReply::Status::transient, "", "malformed response body"};
    const auto& choice = j["choices"][0];
    if (choice.value("finish_reason", "") == "content_filter")
      return {ProviderReply::Status::refusal, "", "content filter"};
    if (!choice.contains("message") || !choice["message"].contains("content"))
      return {ProviderReply::Status::transient, "", "missing message content"};
    return {ProviderReply::Status::ok,
            choice["message"]["content"].get<std::string>(), ""};
  }

 private:
  HttpProviderConfig cfg_;
};

// OpenAI-compatible embeddings endpoint: POST {model, input:[texts]}.
struct HttpEmbeddingConfig {
  std::string base_url;
  std::string path = "/v1/embeddings";
  std::string model = "text-embedding-ada-002";
  std::string api_key_env = "UGC_SENTINEL_API_KEY";
  int timeout_sec = 120;
  int attempt_budget = 3;
};

class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig cfg)
      : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty())
      throw ValidationError("HttpEmbeddingProvider: base_url required");
  }

  std::string id() const override { return "http-embed:" + cfg_.model; }

  std::vector<std::vector<double>> embed(
      const std::vector<std::string>& texts) override {
    nlohmann::json payload = {{"model", cfg_.model}, {"input", texts}};
    const auto bearer = http_detail::bearer_from_env(cfg_.api_key_env);
    std::string last_error;
    for (int attempt = 1; attempt <= cfg_.attempt_budget; ++attempt) {
      const auto res = http_detail::post_json(cfg_.base_url, cfg_.path, bearer,
                                              payload, cfg_.timeout_sec);
      if (res.status == 200) {
        nlohmann::json j = nlohmann::json::parse(res.body, nullptr, false);
        if (j.is_discarded() || !j.contains("data"))
          throw ProviderError("embeddings: malformed response body");
        std::vector<std::vector<double>> out;
        for (const auto& item : j["data"])
          out.push_back(item.at("embedding").get<std::vector<double>>());
        return out;
      }
      if (res.status == 401 || res.status == 403)
        throw ProviderError("embeddings: authentication failure");
      last_error = res.status == 0 ? res.error
                                   : "HTTP " + std::to_string(res.status);
    }
    throw ProviderError("embeddings: retries exhausted (" + last_error + ")");
  }

 private:
  HttpEmbeddingConfig cfg_;
};

// External detector endpoint: POST {document: text}, probability extracted
// from a configurable field path.
struct HttpExternalDetectorConfig {
  std::string base_url;
  std::string path = "/v2/predict/text";
  std::string prob_field = "documents.0.completely_generated_prob";
  std::string api_key_env = "UGC_SENTINEL_API_KEY";
  int timeout_sec = 60;
  int attempt_budget = 3;
};

class HttpExternalDetector : public ExternalDetector {
 public:
  explicit HttpExternalDetector(HttpExternalDetectorConfig cfg)
      : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty())
      throw ValidationError("HttpExternalDetector: base_url required");
  }

  Prediction detect(const Review& doc) override {
    nlohmann::json payload = {{"document", doc.text}};
    const auto bearer = http_detail::bearer_from_env(cfg_.api_key_env);
    std::string last_error;
    for (int attempt = 1; attempt <= cfg_.attempt_budget; ++attempt) {
      const auto res = http_detail::post_json(cfg_.base_url, cfg_.path, bearer,
                                              payload, cfg_.timeout_sec);
      if (res.status == 200) {
        nlohmann::json j = nlohmann::json::parse(res.body, nullptr, false);
        if (!j.is_discarded()) {
          if (auto prob = extract_probability(j, cfg_.prob_field))
            return {doc.id, *prob, "external"};
        }
        throw ProviderError(
            "external detector: response missing probability field " +
            cfg_.prob_field);
      }
      if (res.status == 401 || res.status == 403)
        throw ProviderError("external detector: authentication failure");
      last_error = res.status == 0 ? res.error
                                   : "HTTP " + std::to_string(res.status);
    }
    throw ProviderError("external detector: retries exhausted (" + last_error +
                        ")");
  }

 private:
  HttpExternalDetectorConfig cfg_;
};

}  // namespace ugcs
