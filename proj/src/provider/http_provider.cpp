#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <regex>
#include <thread>

#include "pips/core/errors.hpp"
#include "pips/provider/provider.hpp"

namespace pips {

namespace {

enum class Failure { none, retryable, fatal };

struct AttemptError {
  Failure failure = Failure::none;
  std::string message;
  int status = 0;
  bool timed_out = false;
};

[[noreturn]] void throw_for(const AttemptError& e) {
  if (e.status == 429) throw RateLimited(e.message);
  if (e.status == 401 || e.status == 403) throw AuthFailure(e.message);
  if (e.timed_out || e.status == 408) throw Timeout(e.message);
  throw ProviderError(e.message);
}

std::string snippet(const std::string& body) {
  return body.size() > 300 ? body.substr(0, 300) + "..." : body;
}

}  // namespace

HttpProvider::HttpProvider(HttpProviderConfig config, RetryPolicy retry, Sleeper sleeper)
    : config_(std::move(config)), retry_(retry), sleeper_(std::move(sleeper)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, kUrl)) {
    throw ConfigError("provider base_url must look like http(s)://host[:port][/path], got '" +
                      config_.base_url + "'");
  }
  scheme_host_port_ = m[1].str();
  path_prefix_ = m[2].matched ? m[2].str() : "";
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (retry_.max_attempts < 1) throw ConfigError("retry max_attempts must be >= 1");
  if (!sleeper_) {
    sleeper_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
  }
}

Json HttpProvider::request_body(const ModelRequest& request) {
  Json messages = Json::array();
  for (const auto& m : request.messages) {
    Json content = Json::array();
    for (const auto& p : m.parts) {
      if (p.kind == ContentPart::Kind::text) {
        content.push_back({{"type", "text"}, {"text", p.text}});
      } else {
        content.push_back(
            {{"type", "image_url"},
             {"image_url", {{"url", "data:" + p.media_type + ";base64," + base64_encode(p.bytes)}}}});
      }
    }
    messages.push_back({{"role", to_string(m.role)}, {"content", std::move(content)}});
  }
  Json body = {{"model", request.model_id},
               {"messages", std::move(messages)},
               {"temperature", request.temperature}};
  if (request.max_output_tokens) body["max_tokens"] = *request.max_output_tokens;
  return body;
}

ModelResponse HttpProvider::complete(const ModelRequest& request) {
  request.validate();
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw AuthFailure("environment variable " + config_.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const std::string path = path_prefix_ + "/chat/completions";
  const std::string body = request_body(request).dump();

  AttemptError last;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    if (attempt > 1) sleeper_(retry_.delay_before(attempt));
    network_guard::notify(scheme_host_port_ + path);

    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(config_.timeout_seconds));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path, headers, body, "application/json");
    const double latency =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    last = {};
    if (!res) {
      const auto err = res.error();
      last.failure = Failure::retryable;
      last.timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                       err == httplib::Error::ConnectionTimeout;
      last.message = "request to " + scheme_host_port_ + path + " failed: " + httplib::to_string(err);
      continue;
    }
    const int status = res->status;
    if (status == 200) {
      Json doc = Json::parse(res->body, nullptr, false);
      if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
          doc["choices"].empty()) {
        throw ProviderError("unexpected completion payload: " + snippet(res->body));
      }
      const Json& message = doc["choices"][0].value("message", Json::object());
      ModelResponse out;
      if (message.contains("content") && message["content"].is_string()) {
        out.text = message["content"].get<std::string>();
      } else if (message.contains("content") && message["content"].is_array()) {
        for (const auto& part : message["content"]) {
          if (part.is_object() && part.value("type", "") == "text") {
            out.text += part.value("text", "");
          }
        }
      }
      if (doc.contains("usage") && doc["usage"].is_object()) {
        out.usage.input_tokens = doc["usage"].value("prompt_tokens", std::int64_t{0});
        out.usage.output_tokens = doc["usage"].value("completion_tokens", std::int64_t{0});
      }
      out.latency_seconds = latency;
      return out;
    }
    last.status = status;
    last.message = "HTTP " + std::to_string(status) + " from " + scheme_host_port_ + path + ": " +
                   snippet(res->body);
    const bool transient = status == 429 || status == 408 || status >= 500;
    last.failure = transient ? Failure::retryable : Failure::fatal;
    if (!transient) break;
  }
  if (last.failure == Failure::retryable) {
    last.message += " (after " + std::to_string(retry_.max_attempts) + " attempts)";
  }
  throw_for(last);
}

}  // namespace pips
