#pragma once

#include <functional>
#include <memory>
#include <string>

#include "mref/judge/config.hpp"

namespace mref::judge {

struct HttpResponse {
  /// 0 when no response arrived (connection failure or timeout).
  int status = 0;
  std::string body;
  /// Transport-level error description when status is 0.
  std::string error;
};

/// Worth retrying: no response, 429, or any 5xx.
inline bool is_retryable(const HttpResponse& r) {
  return r.status == 0 || r.status == 429 || r.status >= 500;
}

/// One POST of a chat-completions body. Implementations must be safe to call
/// from several threads at once.
class JudgeTransport {
public:
  virtual ~JudgeTransport() = default;
  virtual HttpResponse post(const std::string& body) = 0;
};

/// POSTs to <base_url>/chat/completions with a bearer key.
class HttpTransport : public JudgeTransport {
public:
  explicit HttpTransport(const JudgeConfig& cfg);
  HttpResponse post(const std::string& body) override;

private:
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

/// Adapts a callable; handy for scripted replies in tests.
class FunctionTransport : public JudgeTransport {
public:
  explicit FunctionTransport(std::function<HttpResponse(const std::string&)> fn) : fn_(std::move(fn)) {}
  HttpResponse post(const std::string& body) override { return fn_(body); }

private:
  std::function<HttpResponse(const std::string&)> fn_;
};

/// Chat-completions reply body wrapping `content` as the assistant message.
std::string chat_reply(const std::string& content);

}  // namespace mref::judge
