#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "pips/core/errors.hpp"
#include "pips/provider/provider.hpp"
#include "test_support.hpp"

namespace pips {
namespace {

ModelRequest sample_request() {
  ModelRequest r;
  r.model_id = "m";
  r.messages.push_back({Role::user, {ContentPart::make_text("hello")}});
  return r;
}

TEST(ModelRequest, Validate) {
  ModelRequest r = sample_request();
  EXPECT_NO_THROW(r.validate());
  r.temperature = -0.1;
  EXPECT_THROW(r.validate(), DomainError);
  r = sample_request();
  r.max_output_tokens = 0;
  EXPECT_THROW(r.validate(), DomainError);
  r.messages.clear();
  r.max_output_tokens.reset();
  EXPECT_THROW(r.validate(), DomainError);
}

TEST(RequestDigest, StableAndSensitive) {
  ModelRequest a = sample_request();
  ModelRequest b = sample_request();
  EXPECT_EQ(request_digest(a), request_digest(b));
  EXPECT_EQ(request_digest(a).size(), 64u);
  b.temperature = 0.7;
  EXPECT_NE(request_digest(a), request_digest(b));
}

TEST(RequestDigest, ChangesWithImageByte) {
  ModelRequest a = sample_request();
  std::string bytes(64, '\x01');
  a.messages[0].parts.push_back(ContentPart::make_image(bytes, "image/png"));
  ModelRequest b = a;
  b.messages[0].parts[1].bytes[17] ^= 0x40;
  EXPECT_NE(request_digest(a), request_digest(b));
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
  EXPECT_EQ(base64_encode("fo"), "Zm8=");
}

TEST(EstimateCost, OneMillionInputTokens) {
  PriceSheet p{0.10, 0.40};
  EXPECT_NEAR(estimate_cost({1000000, 0}, p), 0.10, 1e-15);
  EXPECT_NEAR(estimate_cost({0, 1000000}, p), 0.40, 1e-15);
  EXPECT_EQ(estimate_cost({123, 456}, PriceSheet{}), 0.0);
}

TEST(EstimateCost, LinearInBothCounts) {
  std::mt19937_64 gen(1);
  for (int i = 0; i < 1000; ++i) {
    PriceSheet p{static_cast<double>(gen() % 1000) / 100, static_cast<double>(gen() % 1000) / 100};
    TokenUsage a{static_cast<std::int64_t>(gen() % 100000), static_cast<std::int64_t>(gen() % 100000)};
    TokenUsage b{static_cast<std::int64_t>(gen() % 100000), static_cast<std::int64_t>(gen() % 100000)};
    const double sum = estimate_cost(a, p) + estimate_cost(b, p);
    ASSERT_NEAR(estimate_cost(a + b, p), sum, 1e-12 * (1 + sum));
    TokenUsage scaled{a.input_tokens * 3, a.output_tokens * 3};
    ASSERT_NEAR(estimate_cost(scaled, p), 3 * estimate_cost(a, p), 1e-12 * (1 + sum));
  }
}

TEST(PriceSheet, NegativeRejected) {
  EXPECT_THROW((PriceSheet{-1, 0}.validate()), DomainError);
}

TEST(ScriptedProvider, QueueThenExhausted) {
  ScriptedProvider p;
  p.push_text("one", {1, 2});
  auto r = p.complete(sample_request());
  EXPECT_EQ(r.text, "one");
  EXPECT_EQ(r.usage, (TokenUsage{1, 2}));
  EXPECT_THROW(p.complete(sample_request()), ProviderError);
  EXPECT_EQ(p.calls(), 2u);
  EXPECT_EQ(p.requests().size(), 2u);
}

TEST(ResponseJson, RoundTrip) {
  ModelResponse r{"text \"quoted\"", {5, 6}, 0.3};
  ModelResponse back = response_from_json(to_json(r));
  EXPECT_EQ(back.text, r.text);
  EXPECT_EQ(back.usage, r.usage);
}

class CountingProvider : public Provider {
 public:
  ModelResponse complete(const ModelRequest& request) override {
    ++calls;
    return {"live:" + request.messages[0].parts[0].text, {3, 4}, 0.0};
  }
  int calls = 0;
};

TEST(CachingProvider, RecordThenReplayWithoutNetwork) {
  test::TempDir dir;
  auto live = std::make_shared<CountingProvider>();
  auto cache = std::make_shared<ReplayCache>(dir.path());
  CachingProvider recorder(live, cache, CacheMode::record);
  auto first = recorder.complete(sample_request());
  auto again = recorder.complete(sample_request());
  EXPECT_EQ(live->calls, 1);
  EXPECT_EQ(first.text, again.text);
  EXPECT_EQ(cache->size(), 1u);

  const auto before = network_guard::attempts();
  int hook_calls = 0;
  network_guard::set_hook([&](std::string_view) { ++hook_calls; });
  CachingProvider replayer(nullptr, std::make_shared<ReplayCache>(dir.path()), CacheMode::replay);
  auto replayed = replayer.complete(sample_request());
  network_guard::set_hook({});
  EXPECT_EQ(replayed.text, "live:hello");
  EXPECT_EQ(replayed.usage, (TokenUsage{3, 4}));
  EXPECT_EQ(hook_calls, 0);
  EXPECT_EQ(network_guard::attempts(), before);
  EXPECT_EQ(replayer.hits(), 1);
}

TEST(CachingProvider, ReplayMissThrows) {
  test::TempDir dir;
  CachingProvider replayer(nullptr, std::make_shared<ReplayCache>(dir.path()), CacheMode::replay);
  EXPECT_THROW(replayer.complete(sample_request()), ReplayMiss);
  EXPECT_EQ(replayer.misses(), 1);
}

TEST(CachingProvider, PassthroughLeavesCacheUntouched) {
  test::TempDir dir;
  auto live = std::make_shared<CountingProvider>();
  auto cache = std::make_shared<ReplayCache>(dir.path());
  CachingProvider p(live, cache, CacheMode::passthrough);
  p.complete(sample_request());
  p.complete(sample_request());
  EXPECT_EQ(live->calls, 2);
  EXPECT_EQ(cache->size(), 0u);
}

TEST(CachingProvider, ConcurrentRecordIsConsistent) {
  test::TempDir dir;
  auto live = std::make_shared<ScriptedProvider>(ScriptedProvider::Responder(
      [](const ModelRequest& r) { return ModelResponse{"r:" + r.messages[0].parts[0].text, {1, 1}, 0}; }));
  CachingProvider p(live, std::make_shared<ReplayCache>(dir.path()), CacheMode::record);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 20; ++i) {
        ModelRequest r = sample_request();
        r.messages[0].parts[0].text = std::to_string((i + t) % 10);
        EXPECT_EQ(p.complete(r).text, "r:" + r.messages[0].parts[0].text);
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ReplayCache(dir.path()).size(), 10u);
}

TEST(CacheMode, Parse) {
  EXPECT_EQ(parse_cache_mode("replay"), CacheMode::replay);
  EXPECT_THROW(parse_cache_mode("sometimes"), ConfigError);
}

TEST(RetryPolicy, ExponentialDelays) {
  RetryPolicy p;
  EXPECT_DOUBLE_EQ(p.delay_before(2), 1.0);
  EXPECT_DOUBLE_EQ(p.delay_before(3), 2.0);
  EXPECT_DOUBLE_EQ(p.delay_before(5), 8.0);
}

}  // namespace
}  // namespace pips
