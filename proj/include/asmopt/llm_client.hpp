#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "asmopt/process.hpp"

namespace asmopt::llm {

struct RemoteModelEndpoint {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key_env = "ASMOPT_API_KEY";
  Seconds timeout{120.0};
};

struct SamplingParams {
  double temperature = 0.5;
  int max_tokens = 2000;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_delay{500};
  double backoff_factor = 2.0;
};

struct HttpReply {
  int status = 0;
  std::string body;
};

/// Carries one POST. Implementations throw EndpointError(retryable=true)
/// for connection-level failures (refused, reset, timeout).
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpReply post(const std::string& path, const std::string& body,
                         const std::map<std::string, std::string>& headers) = 0;
};

/// cpp-httplib transport bound to the endpoint's scheme://host[:port].
class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(const RemoteModelEndpoint& endpoint);
  HttpReply post(const std::string& path, const std::string& body,
                 const std::map<std::string, std::string>& headers) override;

 private:
  std::string origin_;
  Seconds timeout_;
};

/// Chat-completion client: one user message in, the assistant's text out.
class ChatClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  ChatClient(RemoteModelEndpoint endpoint, std::shared_ptr<ChatTransport> transport,
             RetryPolicy retry = {}, Sleeper sleep = {});

  /// Throws EndpointError (after retries for transient failures) or
  /// ResponseEmpty.
  std::string complete(const std::string& prompt, const SamplingParams& sampling) const;

  std::string request_body(const std::string& prompt, const SamplingParams& sampling) const;
  const RemoteModelEndpoint& endpoint() const { return endpoint_; }

 private:
  std::string request_path() const;

  RemoteModelEndpoint endpoint_;
  std::shared_ptr<ChatTransport> transport_;
  RetryPolicy retry_;
  Sleeper sleep_;
};

/// Extracts choices[0].message.content from a chat-completion response.
/// Throws EndpointError on a malformed body, ResponseEmpty on empty content.
std::string parse_completion(const std::string& body);

}  // namespace asmopt::llm
