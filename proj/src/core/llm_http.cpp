#include <httplib.h>

#include "core/llm.hpp"
#include "core/sample.hpp"

namespace tell {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path below the origin, no trailing slash
};

Endpoint split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint '" + url + "' has no scheme");
  auto path_at = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_at);
  e.prefix = path_at == std::string::npos ? "" : url.substr(path_at);
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

class HttpProvider : public LlmProvider {
 public:
  explicit HttpProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)), endpoint_(split_url(cfg_.endpoint)) {
    if (cfg_.api_key.empty()) throw Error(ErrorCode::InvalidArgument, "live provider needs an API key");
    if (cfg_.model.empty()) throw Error(ErrorCode::InvalidArgument, "live provider needs a model name");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (endpoint_.origin.rfind("https://", 0) == 0)
      throw Error(ErrorCode::InvalidArgument, "this build has no TLS support; use an http:// endpoint");
#endif
  }

  std::string model_id() const override { return cfg_.endpoint + "#" + cfg_.model; }

  std::string complete(const std::string& prompt, const Decoding& decoding) override {
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    client.set_write_timeout(cfg_.timeout_seconds, 0);
    client.set_bearer_token_auth(cfg_.api_key);

    Json body{{"model", cfg_.model},
              {"messages", Json::array({Json{{"role", "user"}, {"content", prompt}}})},
              {"temperature", decoding.temperature},
              {"max_tokens", decoding.max_tokens}};
    if (decoding.seed) body["seed"] = *decoding.seed;

    auto res = client.Post(endpoint_.prefix + "/chat/completions", body.dump(), "application/json");
    if (!res) {
      auto err = res.error();
      auto kind = err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout
                      ? FailureKind::Timeout
                      : FailureKind::ServerError;
      throw ProviderError(kind, "request failed: " + httplib::to_string(err));
    }
    if (res->status == 429) throw ProviderError(FailureKind::RateLimited, "HTTP 429");
    if (res->status == 408) throw ProviderError(FailureKind::Timeout, "HTTP 408");
    if (res->status >= 500) throw ProviderError(FailureKind::ServerError, "HTTP " + std::to_string(res->status));
    if (res->status != 200) {
      throw ProviderError(FailureKind::ServerError, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300),
                          false);
    }
    Json reply = Json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty())
      throw ProviderError(FailureKind::MalformedReply, "response has no choices");
    const Json& msg = reply["choices"][0].value("message", Json::object());
    if (!msg.contains("content") || !msg["content"].is_string())
      throw ProviderError(FailureKind::MalformedReply, "response has no message content");
    return msg["content"].get<std::string>();
  }

 private:
  HttpProviderConfig cfg_;
  Endpoint endpoint_;
};

}  // namespace

std::unique_ptr<LlmProvider> make_http_provider(const HttpProviderConfig& cfg) {
  return std::make_unique<HttpProvider>(cfg);
}

bool http_tls_available() {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
  return true;
#else
  return false;
#endif
}

}  // namespace tell
