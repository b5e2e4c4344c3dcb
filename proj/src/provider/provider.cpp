#include "pips/provider/provider.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pips/core/errors.hpp"
#include "pips/core/serialize.hpp"

namespace pips {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

ContentPart ContentPart::make_text(std::string text) {
  ContentPart part;
  part.kind = Kind::text;
  part.text = std::move(text);
  return part;
}

ContentPart ContentPart::make_image(std::string bytes, std::string media_type) {
  ContentPart part;
  part.kind = Kind::image;
  part.bytes = std::move(bytes);
  part.media_type = std::move(media_type);
  return part;
}

void ModelRequest::validate() const {
  if (messages.empty()) throw DomainError("ModelRequest.messages must not be empty");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw DomainError("ModelRequest.temperature must be >= 0");
  }
  if (max_output_tokens && *max_output_tokens <= 0) {
    throw DomainError("ModelRequest.max_output_tokens must be positive");
  }
}

void PriceSheet::validate() const {
  if (!(usd_per_million_input >= 0.0) || !(usd_per_million_output >= 0.0)) {
    throw DomainError("prices must be >= 0");
  }
}

double estimate_cost(const TokenUsage& usage, const PriceSheet& prices) {
  return static_cast<double>(usage.input_tokens) * prices.usd_per_million_input / 1e6 +
         static_cast<double>(usage.output_tokens) * prices.usd_per_million_output / 1e6;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

Json to_json(const ModelRequest& request) {
  Json messages = Json::array();
  for (const auto& m : request.messages) {
    Json parts = Json::array();
    for (const auto& p : m.parts) {
      if (p.kind == ContentPart::Kind::text) {
        parts.push_back({{"type", "text"}, {"text", p.text}});
      } else {
        parts.push_back(
            {{"type", "image"}, {"media_type", p.media_type}, {"data", base64_encode(p.bytes)}});
      }
    }
    messages.push_back({{"role", to_string(m.role)}, {"parts", std::move(parts)}});
  }
  return {{"model_id", request.model_id},
          {"messages", std::move(messages)},
          {"temperature", request.temperature},
          {"max_output_tokens",
           request.max_output_tokens ? Json(*request.max_output_tokens) : Json()}};
}

Json to_json(const ModelResponse& response) {
  return {{"text", response.text},
          {"usage", to_json(response.usage)},
          {"latency_seconds", response.latency_seconds}};
}

ModelResponse response_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("text") || !doc["text"].is_string()) {
    throw SchemaError("model response must be an object with a text field");
  }
  ModelResponse out;
  out.text = doc["text"].get<std::string>();
  if (doc.contains("usage")) out.usage = token_usage_from_json(doc["usage"]);
  out.latency_seconds = doc.value("latency_seconds", 0.0);
  return out;
}

std::string request_digest(const ModelRequest& request) {
  return sha256_hex(canonical_dump(to_json(request)));
}

namespace network_guard {
namespace {
std::mutex g_mutex;
Hook g_hook;
std::atomic<std::int64_t> g_attempts{0};
}  // namespace

void set_hook(Hook hook) {
  std::lock_guard lock(g_mutex);
  g_hook = std::move(hook);
}

void notify(std::string_view url) {
  ++g_attempts;
  Hook hook;
  {
    std::lock_guard lock(g_mutex);
    hook = g_hook;
  }
  if (hook) hook(url);
}

std::int64_t attempts() { return g_attempts.load(); }
}  // namespace network_guard

ScriptedProvider::ScriptedProvider(std::vector<ModelResponse> responses)
    : queue_(responses.begin(), responses.end()) {}

ScriptedProvider::ScriptedProvider(Responder responder) : responder_(std::move(responder)) {}

void ScriptedProvider::push(ModelResponse response) {
  std::lock_guard lock(mutex_);
  queue_.push_back(std::move(response));
}

void ScriptedProvider::push_text(std::string text, TokenUsage usage) {
  push(ModelResponse{std::move(text), usage, 0.0});
}

ModelResponse ScriptedProvider::complete(const ModelRequest& request) {
  request.validate();
  Responder responder;
  {
    std::lock_guard lock(mutex_);
    seen_.push_back(request);
    if (!queue_.empty()) {
      ModelResponse out = std::move(queue_.front());
      queue_.pop_front();
      return out;
    }
    responder = responder_;
  }
  if (!responder) throw ProviderError("scripted provider has no response left");
  return responder(request);
}

std::vector<ModelRequest> ScriptedProvider::requests() const {
  std::lock_guard lock(mutex_);
  return seen_;
}

std::size_t ScriptedProvider::calls() const {
  std::lock_guard lock(mutex_);
  return seen_.size();
}

std::string_view to_string(CacheMode mode) {
  switch (mode) {
    case CacheMode::record: return "record";
    case CacheMode::replay: return "replay";
    case CacheMode::passthrough: return "passthrough";
  }
  return "passthrough";
}

CacheMode parse_cache_mode(std::string_view name) {
  if (name == "record") return CacheMode::record;
  if (name == "replay") return CacheMode::replay;
  if (name == "passthrough") return CacheMode::passthrough;
  throw ConfigError("unknown cache mode '" + std::string(name) +
                    "' (expected record, replay or passthrough)");
}

ReplayCache::ReplayCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ReplayCache::path_for(const std::string& digest) const {
  if (digest.empty() || digest.find_first_not_of("0123456789abcdef") != std::string::npos) {
    throw DomainError("malformed request digest: " + digest);
  }
  return dir_ / (digest + ".json");
}

std::optional<ModelResponse> ReplayCache::load(const std::string& digest) const {
  std::ifstream in(path_for(digest), std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc = Json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded() || !doc.contains("response")) {
    throw SchemaError("corrupt replay cache entry " + path_for(digest).string());
  }
  return response_from_json(doc["response"]);
}

void ReplayCache::store(const std::string& digest, const ModelRequest& request,
                        const ModelResponse& response) {
  const auto target = path_for(digest);
  const std::string body =
      canonical_dump({{"request", to_json(request)}, {"response", to_json(response)}}) + "\n";
  std::lock_guard lock(write_mutex_);
  const auto tmp = dir_ / (digest + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out.flush()) throw Error("cannot write replay cache entry " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

std::size_t ReplayCache::size() const {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() == ".json") ++n;
  }
  return n;
}

CachingProvider::CachingProvider(std::shared_ptr<Provider> live, std::shared_ptr<ReplayCache> cache,
                                 CacheMode mode)
    : live_(std::move(live)), cache_(std::move(cache)), mode_(mode) {
  if (mode_ != CacheMode::passthrough && !cache_) {
    throw ConfigError("cache mode " + std::string(to_string(mode_)) + " needs a cache directory");
  }
  if (mode_ != CacheMode::replay && !live_) {
    throw ConfigError("cache mode " + std::string(to_string(mode_)) + " needs a live provider");
  }
}

ModelResponse CachingProvider::complete(const ModelRequest& request) {
  request.validate();
  if (mode_ == CacheMode::passthrough) return live_->complete(request);
  const std::string digest = request_digest(request);
  if (auto hit = cache_->load(digest)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  if (mode_ == CacheMode::replay) {
    throw ReplayMiss("no cached response for request " + digest + " (model " + request.model_id +
                     ")");
  }
  ModelResponse response = live_->complete(request);
  cache_->store(digest, request, response);
  // Serve the persisted form so a repeat returns the same bytes.
  return response_from_json(to_json(response));
}

double RetryPolicy::delay_before(int attempt) const {
  return base_seconds * std::pow(factor, attempt - 2);
}

}  // namespace pips
