#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "core/error.hpp"

namespace tell {

struct Decoding {
  double temperature = 0.0;
  int max_tokens = 1024;
  std::optional<std::uint64_t> seed;
};

enum class FailureKind { Timeout, RateLimited, ServerError, MalformedReply };
std::string to_string(FailureKind k);

class ProviderError : public Error {
 public:
  ProviderError(FailureKind kind, const std::string& message, bool retryable = true)
      : Error(ErrorCode::ProviderFailure, to_string(kind) + ": " + message), kind_(kind), retryable_(retryable) {}
  FailureKind kind() const noexcept { return kind_; }
  bool retryable() const noexcept { return retryable_ && kind_ != FailureKind::MalformedReply; }

 private:
  FailureKind kind_;
  bool retryable_;
};

// Completion provider. Implementations throw ProviderError and keep no state
// that changes what later calls return, other than their own caches.
class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual std::string complete(const std::string& prompt, const Decoding& decoding) = 0;
  // Goes into cache keys so replies from different models never mix.
  virtual std::string model_id() const = 0;
};

enum class MockMode { Echo, Background, CorruptAnswer, StepSplit };
std::optional<MockMode> parse_mock_mode(std::string_view name);
std::string to_string(MockMode m);

// Offline provider. Reads the problem or solution back out of the prompt and
// rewrites it deterministically from (prompt, seed).
class MockProvider : public LlmProvider {
 public:
  explicit MockProvider(MockMode mode, std::uint64_t seed = 0) : mode_(mode), seed_(seed) {}
  std::string complete(const std::string& prompt, const Decoding& decoding) override;
  std::string model_id() const override { return "mock:" + to_string(mode_); }

 private:
  MockMode mode_;
  std::uint64_t seed_;
};

struct HttpProviderConfig {
  std::string endpoint;  // base URL, e.g. https://api.openai.com/v1
  std::string api_key;
  std::string model;
  int timeout_seconds = 60;
};

// OpenAI-compatible chat completions endpoint.
std::unique_ptr<LlmProvider> make_http_provider(const HttpProviderConfig& cfg);
bool http_tls_available();

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{16000};
  // Defaults to std::this_thread::sleep_for; tests swap in a recorder.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Retries Timeout, RateLimited and ServerError with exponential backoff.
// MalformedReply and non-retryable failures propagate at once.
std::string complete_with_retry(LlmProvider& provider, const std::string& prompt, const Decoding& decoding,
                                const RetryPolicy& policy);

std::uint64_t fnv1a64(std::string_view data);

// Append-only reply log. Each line records the prompt hash, the sample id
// and the raw reply; loading a log makes earlier replies available again.
class ReplyCache {
 public:
  ReplyCache() = default;
  explicit ReplyCache(std::string path);

  static std::string key(const LlmProvider& provider, const std::string& prompt, const Decoding& decoding,
                         int attempt = 0);
  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& sample_id, const std::string& reply);
  std::size_t size() const;

 private:
  std::string path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> replies_;
};

// Cache lookup, then provider call with retry, then cache write.
std::string cached_completion(LlmProvider& provider, ReplyCache* cache, const std::string& sample_id,
                              const std::string& prompt, const Decoding& decoding, const RetryPolicy& policy,
                              int attempt = 0);

}  // namespace tell
