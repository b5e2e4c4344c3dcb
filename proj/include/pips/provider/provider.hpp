#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pips/core/types.hpp"

namespace pips {

enum class Role { system, user, assistant };
std::string_view to_string(Role role);

struct ContentPart {
  enum class Kind { text, image };
  Kind kind = Kind::text;
  std::string text;        // kind == text
  std::string bytes;       // kind == image, raw file bytes
  std::string media_type;  // kind == image

  static ContentPart make_text(std::string text);
  static ContentPart make_image(std::string bytes, std::string media_type);
};

struct Message {
  Role role = Role::user;
  std::vector<ContentPart> parts;
};

struct ModelRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.0;
  std::optional<std::int64_t> max_output_tokens;

  // Throws DomainError on empty messages, negative temperature or a
  // non-positive token cap.
  void validate() const;
};

struct ModelResponse {
  std::string text;
  TokenUsage usage;
  double latency_seconds = 0.0;
};

struct PriceSheet {
  double usd_per_million_input = 0.0;
  double usd_per_million_output = 0.0;

  void validate() const;
};

double estimate_cost(const TokenUsage& usage, const PriceSheet& prices);

// Canonical request tree; images are embedded as base64 of their bytes.
Json to_json(const ModelRequest& request);
Json to_json(const ModelResponse& response);
ModelResponse response_from_json(const Json& doc);

// Lowercase hex SHA-256 of canonical_dump(to_json(request)).
std::string request_digest(const ModelRequest& request);

std::string base64_encode(std::string_view bytes);
std::string sha256_hex(std::string_view bytes);

class Provider {
 public:
  virtual ~Provider() = default;
  virtual ModelResponse complete(const ModelRequest& request) = 0;
};

// Every live network attempt made by HttpProvider goes through here, so tests
// can assert that replay runs stay offline.
namespace network_guard {
using Hook = std::function<void(std::string_view url)>;
void set_hook(Hook hook);
void notify(std::string_view url);
std::int64_t attempts();
}  // namespace network_guard

// Returns canned responses in order, or computes them with a callback. Keeps
// every request it saw.
class ScriptedProvider : public Provider {
 public:
  using Responder = std::function<ModelResponse(const ModelRequest&)>;

  ScriptedProvider() = default;
  explicit ScriptedProvider(std::vector<ModelResponse> responses);
  explicit ScriptedProvider(Responder responder);

  void push(ModelResponse response);
  void push_text(std::string text, TokenUsage usage = {10, 10});

  // Throws ProviderError when the script is exhausted.
  ModelResponse complete(const ModelRequest& request) override;

  std::vector<ModelRequest> requests() const;
  std::size_t calls() const;

 private:
  mutable std::mutex mutex_;
  std::deque<ModelResponse> queue_;
  Responder responder_;
  std::vector<ModelRequest> seen_;
};

enum class CacheMode { record, replay, passthrough };
std::string_view to_string(CacheMode mode);
CacheMode parse_cache_mode(std::string_view name);

// Directory with one "<digest>.json" file per request holding the canonical
// request and its response. Writes go through a temp file and rename.
class ReplayCache {
 public:
  explicit ReplayCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::optional<ModelResponse> load(const std::string& digest) const;
  void store(const std::string& digest, const ModelRequest& request, const ModelResponse& response);
  std::size_t size() const;

 private:
  std::filesystem::path path_for(const std::string& digest) const;
  std::filesystem::path dir_;
  std::mutex write_mutex_;
};

// record: serve hits from the cache, otherwise call live and persist.
// replay: serve hits, throw ReplayMiss otherwise; never calls live.
// passthrough: always live, cache untouched.
class CachingProvider : public Provider {
 public:
  CachingProvider(std::shared_ptr<Provider> live, std::shared_ptr<ReplayCache> cache, CacheMode mode);

  ModelResponse complete(const ModelRequest& request) override;

  CacheMode mode() const { return mode_; }
  std::int64_t hits() const { return hits_.load(); }
  std::int64_t misses() const { return misses_.load(); }

 private:
  std::shared_ptr<Provider> live_;
  std::shared_ptr<ReplayCache> cache_;
  CacheMode mode_;
  std::atomic<std::int64_t> hits_{0};
  std::atomic<std::int64_t> misses_{0};
};

struct RetryPolicy {
  double base_seconds = 1.0;
  double factor = 2.0;
  int max_attempts = 5;

  // Delay before attempt number `attempt` (1-based, attempt >= 2).
  double delay_before(int attempt) const;
};

struct HttpProviderConfig {
  // e.g. "https://api.openai.com/v1"; requests go to <base_url>/chat/completions.
  std::string base_url;
  // Name of the environment variable holding the bearer token. Empty means
  // no Authorization header.
  std::string api_key_env;
  double timeout_seconds = 120.0;
};

// OpenAI-compatible chat-completions client.
class HttpProvider : public Provider {
 public:
  using Sleeper = std::function<void(double seconds)>;

  explicit HttpProvider(HttpProviderConfig config, RetryPolicy retry = {}, Sleeper sleeper = {});

  ModelResponse complete(const ModelRequest& request) override;

  static Json request_body(const ModelRequest& request);

 private:
  HttpProviderConfig config_;
  RetryPolicy retry_;
  Sleeper sleeper_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace pips
