#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "ugc_sentinel/error.hpp"
#include "ugc_sentinel/net.hpp"
#include "ugc_sentinel/parsers.hpp"
#include "ugc_sentinel/prompts.hpp"
#include "ugc_sentinel/sha256.hpp"
#include "ugc_sentinel/text.hpp"

namespace ugcs {

struct DecodingParams {
  double temperature = 0.0;
  int max_tokens = 1024;
};

// Measurement prompts run at temperature 0; fabrication keeps some
// generative diversity by default.
inline DecodingParams default_decoding(TemplateId id) {
  DecodingParams p;
  p.temperature = id == TemplateId::fabricate_value_negative ? 0.7 : 0.0;
  return p;
}

struct CompletionRequest {
  TemplateId template_id = TemplateId::entity_discovery;
  std::map<std::string, std::string> vars;
  DecodingParams decoding;
  std::string provider_id;
  int attempt_budget = 3;
};

struct ProviderReply {
  enum class Status { ok, transient, auth, refusal };
  Status status = Status::ok;
  std::string text;
  std::string error;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string id() const = 0;
  virtual ProviderReply complete(const CompletionRequest& req,
                                 const std::string& prompt) = 0;
};

// --------------------------------------------------------------------------
// Deterministic offline synthesis, used by the mock provider as a fallback
// so whole pipelines can run without a live model. Keyword-driven and pure.

namespace synth {

struct EntityRule {
  const char* entity;
  std::vector<const char*> keywords;
};

inline const std::vector<EntityRule>& entity_rules() {
  static const std::vector<EntityRule> rules = {
      {"Product Quality", {"quality", "sturdy", "well made", "durable"}},
      {"Customer Experience", {"experience", "enjoyed", "hassle"}},
      {"Pricing", {"price", "pricing", "cost", "cheap", "expensive", "value for money", "worth"}},
      {"Brand Name", {"brand"}},
      {"Delivery Time", {"delivery", "shipping", "arrived", "shipped"}},
      {"Product Functionality", {"works", "working", "functional", "function"}},
      {"Customer Service", {"customer service", "support", "service"}},
      {"Ease of Use", {"easy to use", "easy", "simple to"}},
      {"Product Features", {"feature", "features"}},
      {"User Experience", {"interface", "comfortable", "intuitive"}},
      {"Food Quality", {"food", "delicious", "tasty", "meal"}},
      {"Service Quality", {"server", "waiter", "prompt service"}},
      {"Atmosphere", {"atmosphere", "ambiance", "cozy"}},
      {"Cleanliness", {"clean", "spotless", "dirty"}},
      {"Staff Friendliness", {"friendly", "staff", "welcoming"}},
  };
  return rules;
}

inline bool mentions(const std::string& lowered, const EntityRule& rule) {
  for (const auto* kw : rule.keywords)
    if (lowered.find(kw) != std::string::npos) return true;
  return false;
}

inline int tone_score(const std::string& lowered) {
  static const std::vector<const char*> pos = {
      "love", "great", "excellent", "perfect", "amazing", "delicious",
      "wonderful", "good"};
  static const std::vector<const char*> neg = {
      "bad",        "poor",     "broken", "disappoint", "pricey",
      "overpriced", "terrible", "awful",  "not worth",  "could be better"};
  int t = 0;
  for (const auto* w : pos)
    if (lowered.find(w) != std::string::npos) ++t;
  for (const auto* w : neg)
    if (lowered.find(w) != std::string::npos) --t;
  return t;
}

inline std::string fabricate_variant(const std::string& ugc) {
  std::string out = ugc;
  auto replace_first = [&](std::string_view from, std::string_view to) {
    const auto at = out.find(from);
    if (at != std::string::npos) out.replace(at, from.size(), to);
  };
  replace_first("Love", "Like");
  replace_first("love", "like");
  replace_first("great", "okay");
  replace_first("Great", "Decent");
  replace_first("excellent", "acceptable");
  replace_first("amazing", "decent");
  out += " However, the value for money could be better.";
  return out;
}

inline std::string discovery_reply(const std::string& ugc) {
  const std::string lowered = text::lowercase(ugc);
  ParsedEntities found;
  for (const auto& rule : entity_rules())
    if (mentions(lowered, rule)) found.entities.push_back(rule.entity);
  if (found.entities.empty()) found.none_flag = true;
  return serialize_entity_list(found);
}

inline std::string consolidation_reply(const std::string& table_str,
                                       std::size_t k) {
  // Input is the serialized 'entity': count, ... table; rank by count.
  std::vector<std::pair<std::string, long>> items;
  std::size_t i = 0;
  while (i < table_str.size()) {
    const auto q1 = table_str.find('\'', i);
    if (q1 == std::string::npos) break;
    const auto q2 = table_str.find('\'', q1 + 1);
    if (q2 == std::string::npos) break;
    const auto colon = table_str.find(':', q2);
    if (colon == std::string::npos) break;
    long count = std::strtol(table_str.c_str() + colon + 1, nullptr, 10);
    items.push_back({table_str.substr(q1 + 1, q2 - q1 - 1), count});
    i = colon + 1;
  }
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::string out;
  for (std::size_t n = 0; n < items.size() && n < k; ++n) {
    out += std::to_string(n + 1) + ". " + items[n].first +
           ": frequently discussed and strategically relevant.\n";
  }
  if (out.empty()) out = "No entities provided.";
  return out;
}

inline std::string nese_reply(const std::string& ugc,
                              const std::string& entities_csv) {
  const std::string lowered = text::lowercase(ugc);
  std::vector<std::string> allowed;
  std::size_t pos = 0;
  while (pos <= entities_csv.size()) {
    const auto comma = entities_csv.find(',', pos);
    const std::string item = text::trim(
        comma == std::string::npos
            ? std::string_view(entities_csv).substr(pos)
            : std::string_view(entities_csv).substr(pos, comma - pos));
    if (!item.empty()) allowed.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  const int tone = tone_score(lowered);
  std::vector<EntitySentiment> pairs;
  for (const auto& name : allowed) {
    for (const auto& rule : entity_rules()) {
      if (text::normalize_key(rule.entity) != text::normalize_key(name))
        continue;
      if (!mentions(lowered, rule)) continue;
      int score = 4 + (tone > 0 ? 2 : tone < 0 ? -2 : 0);
      // Value-skeptical phrasing drags the price sentiment down hard.
      if (std::string_view(rule.entity) == "Pricing" &&
          (lowered.find("value for money could be better") !=
               std::string::npos ||
           lowered.find("overpriced") != std::string::npos ||
           lowered.find("pricey") != std::string::npos))
        score = 2;
      if (score < 1) score = 1;
      if (score > 7) score = 7;
      pairs.push_back({name, score});
      break;
    }
  }
  if (pairs.empty()) return "No entities detected.";
  return serialize_entity_sentiments(pairs);
}

inline std::string reply_for(const CompletionRequest& req) {
  auto var = [&](const char* name) -> std::string {
    auto it = req.vars.find(name);
    return it == req.vars.end() ? std::string() : it->second;
  };
  switch (req.template_id) {
    case TemplateId::fabricate_value_negative:
      return fabricate_variant(var("ugc"));
    case TemplateId::entity_discovery:
      return discovery_reply(var("ugc"));
    case TemplateId::entity_consolidation: {
      std::size_t k = 10;
      if (auto it = req.vars.find("k"); it != req.vars.end())
        k = static_cast<std::size_t>(std::strtoul(it->second.c_str(), nullptr, 10));
      return consolidation_reply(var("entity_frequencies"), k);
    }
    case TemplateId::nese_eval:
      return nese_reply(var("ugc"), var("entities"));
  }
  return "";
}

}  // namespace synth

// --------------------------------------------------------------------------
// Mock provider: echo, scripted responses, or deterministic synthesis.
// Pure by construction — identical requests always get identical replies.

class MockChatProvider : public ChatProvider {
 public:
  struct Options {
    // When set, replies with the named bound variable (echo mode).
    std::optional<std::string> echo_var;
    // When false, unscripted requests draw an error instead of synthesis.
    bool synthesize = true;
  };

  MockChatProvider() = default;
  explicit MockChatProvider(Options opts) : opts_(std::move(opts)) {}

  std::string id() const override { return "mock"; }

  // Scripted replies are keyed by template id plus the request's "id" var
  // (or a hash of all vars when no id is bound).
  static std::string script_key(const CompletionRequest& req) {
    std::string key = to_string(req.template_id);
    key += ":";
    if (auto it = req.vars.find("id"); it != req.vars.end()) {
      key += it->second;
    } else {
      nlohmann::json j(req.vars);
      key += sha256_hex(j.dump()).substr(0, 16);
    }
    return key;
  }

  void script(const std::string& key, ProviderReply reply) {
    scripted_[key] = std::move(reply);
  }
  void script_text(const std::string& key, std::string canned) {
    scripted_[key] = {ProviderReply::Status::ok, std::move(canned), ""};
  }

  ProviderReply complete(const CompletionRequest& req,
                         const std::string& prompt) override {
    (void)prompt;
    if (auto it = scripted_.find(script_key(req)); it != scripted_.end())
      return it->second;
    if (opts_.echo_var) {
      auto it = req.vars.find(*opts_.echo_var);
      if (it != req.vars.end())
        return {ProviderReply::Status::ok, it->second, ""};
    }
    if (opts_.synthesize)
      return {ProviderReply::Status::ok, synth::reply_for(req), ""};
    return {ProviderReply::Status::transient, "", "unscripted request"};
  }

 private:
  Options opts_;
  std::map<std::string, ProviderReply> scripted_;
};

// Wraps a provider and fails the first `failures` calls per script key with
// a transient error. Fault-injection harness for retry tests.
class FlakyProvider : public ChatProvider {
 public:
  FlakyProvider(std::shared_ptr<ChatProvider> inner, int failures)
      : inner_(std::move(inner)), failures_(failures) {}

  std::string id() const override { return inner_->id(); }

  ProviderReply complete(const CompletionRequest& req,
                         const std::string& prompt) override {
    const std::string key = MockChatProvider::script_key(req);
    std::lock_guard<std::mutex> lock(mu_);
    int& used = used_[key];
    if (used < failures_) {
      ++used;
      return {ProviderReply::Status::transient, "", "simulated 5xx"};
    }
    return inner_->complete(req, prompt);
  }

 private:
  std::shared_ptr<ChatProvider> inner_;
  int failures_;
  std::mutex mu_;
  std::map<std::string, int> used_;
};

// --------------------------------------------------------------------------
// Response cache: content-addressed JSON files, concurrent readers, writes
// serialized and atomic (write-temp-then-rename).

class ResponseCache {
 public:
  explicit ResponseCache(std::string dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::optional<std::string> get(const std::string& key) const {
    const auto p = path_for(key);
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("response")) return std::nullopt;
    return j["response"].get<std::string>();
  }

  void put(const std::string& key, const nlohmann::json& request_summary,
           const std::string& response) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto p = path_for(key);
    std::filesystem::create_directories(p.parent_path());
    nlohmann::json j;
    j["request"] = request_summary;
    j["response"] = response;
    const auto tmp = p.string() + ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary);
      os << j.dump(2);
    }
    std::filesystem::rename(tmp, p);
  }

 private:
  std::filesystem::path path_for(const std::string& key) const {
    return std::filesystem::path(dir_) / key.substr(0, 2) / (key + ".json");
  }

  std::string dir_;
  mutable std::mutex mu_;
};

// --------------------------------------------------------------------------
// Token-bucket rate limiter. rate_per_sec <= 0 disables it.

class TokenBucket {
 public:
  TokenBucket(double rate_per_sec, double capacity)
      : rate_(rate_per_sec),
        capacity_(capacity),
        tokens_(capacity),
        last_(Clock::now()) {}

  void acquire() {
    if (rate_ <= 0) return;
    std::unique_lock<std::mutex> lock(mu_);
    while (true) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const double need = (1.0 - tokens_) / rate_;
      lock.unlock();
      std::this_thread::sleep_for(std::chrono::duration<double>(need));
      lock.lock();
    }
  }

 private:
  using Clock = std::chrono::steady_clock;

  void refill() {
    const auto now = Clock::now();
    const double dt = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + dt * rate_);
  }

  double rate_, capacity_, tokens_;
  Clock::time_point last_;
  std::mutex mu_;
};

// --------------------------------------------------------------------------
// Gateway: render, rate-limit, retry with exponential backoff, cache, log.

struct GatewayConfig {
  std::string cache_dir;        // empty disables caching
  double backoff_base_ms = 200; // 0 disables sleeping (tests)
  double rate_per_sec = 0;      // <= 0 disables rate limiting
  int max_in_flight = 4;
};

struct CallLogEntry {
  TemplateId template_id;
  int attempts = 0;
  double latency_ms = 0;
  bool from_cache = false;
  std::string outcome;  // ok | refusal | auth | exhausted
};

struct Completion {
  std::string text;
  int attempts = 0;
  bool from_cache = false;
};

class Gateway {
 public:
  Gateway(std::shared_ptr<ChatProvider> provider, GatewayConfig cfg = {})
      : provider_(std::move(provider)),
        cfg_(cfg),
        bucket_(cfg.rate_per_sec, std::max(1.0, cfg.rate_per_sec)) {
    if (!cfg_.cache_dir.empty())
      cache_ = std::make_unique<ResponseCache>(cfg_.cache_dir);
  }

  std::string cache_key(const CompletionRequest& req,
                        const std::string& version) const {
    nlohmann::json j;
    j["template"] = to_string(req.template_id);
    j["version"] = version;
    j["vars"] = req.vars;
    j["temperature"] = req.decoding.temperature;
    j["max_tokens"] = req.decoding.max_tokens;
    j["provider"] = provider_->id();
    return sha256_hex(j.dump());
  }

  Completion complete(CompletionRequest req) {
    if (req.attempt_budget < 1)
      throw ValidationError("gateway: attempt budget must be >= 1");
    const auto& tpl = get_template(req.template_id);
    const std::string prompt = render_prompt(req.template_id, req.vars);
    const std::string key = cache_key(req, tpl.version);

    if (cache_) {
      if (auto hit = cache_->get(key)) {
        log_call(req.template_id, 0, 0.0, true, "ok");
        return {*hit, 0, true};
      }
    }

    const auto t0 = std::chrono::steady_clock::now();
    for (int attempt = 1; attempt <= req.attempt_budget; ++attempt) {
      bucket_.acquire();
      ProviderReply reply;
      {
        InFlightGuard guard(*this);
        reply = provider_->complete(req, prompt);
      }
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      switch (reply.status) {
        case ProviderReply::Status::ok: {
          if (cache_) {
            nlohmann::json summary;
            summary["template"] = to_string(req.template_id);
            summary["version"] = tpl.version;
            summary["vars"] = req.vars;
            cache_->put(key, summary, reply.text);
          }
          log_call(req.template_id, attempt, ms, false, "ok");
          return {reply.text, attempt, false};
        }
        case ProviderReply::Status::refusal:
          log_call(req.template_id, attempt, ms, false, "refusal");
          throw RefusalError("provider refused the document: " + reply.error);
        case ProviderReply::Status::auth:
          log_call(req.template_id, attempt, ms, false, "auth");
          throw ProviderError("authentication failure: " + reply.error);
        case ProviderReply::Status::transient:
          if (attempt < req.attempt_budget && cfg_.backoff_base_ms > 0) {
            const double delay =
                cfg_.backoff_base_ms * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(
                std::chrono::duration<double, std::milli>(delay));
          }
          break;
      }
    }
    log_call(req.template_id, req.attempt_budget, 0.0, false, "exhausted");
    throw ProviderError("retries exhausted after " +
                        std::to_string(req.attempt_budget) + " attempts");
  }

  std::vector<CallLogEntry> call_log() const {
    std::lock_guard<std::mutex> lock(log_mu_);
    return log_;
  }

 private:
  class InFlightGuard {
   public:
    explicit InFlightGuard(Gateway& g) : g_(g) {
      std::unique_lock<std::mutex> lock(g_.inflight_mu_);
      g_.inflight_cv_.wait(lock,
                           [&] { return g_.in_flight_ < g_.cfg_.max_in_flight; });
      ++g_.in_flight_;
    }
    ~InFlightGuard() {
      {
        std::lock_guard<std::mutex> lock(g_.inflight_mu_);
        --g_.in_flight_;
      }
      g_.inflight_cv_.notify_one();
    }

   private:
    Gateway& g_;
  };

  void log_call(TemplateId id, int attempts, double ms, bool cached,
                const std::string& outcome) {
    std::lock_guard<std::mutex> lock(log_mu_);
    log_.push_back({id, attempts, ms, cached, outcome});
  }

  std::shared_ptr<ChatProvider> provider_;
  GatewayConfig cfg_;
  TokenBucket bucket_;
  std::unique_ptr<ResponseCache> cache_;
  mutable std::mutex log_mu_;
  std::vector<CallLogEntry> log_;
  std::mutex inflight_mu_;
  std::condition_variable inflight_cv_;
  int in_flight_ = 0;
};

}  // namespace ugcs
