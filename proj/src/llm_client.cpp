#include "asmopt/llm_client.hpp"

#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "asmopt/errors.hpp"

namespace asmopt::llm {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // no trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpChatTransport::HttpChatTransport(const RemoteModelEndpoint& endpoint)
    : origin_(split_url(endpoint.base_url).origin), timeout_(endpoint.timeout) {}

HttpReply HttpChatTransport::post(const std::string& path, const std::string& body,
                                  const std::map<std::string, std::string>& headers) {
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path, h, body, "application/json");
  if (!res) {
    throw EndpointError("request to " + origin_ + path + " failed: " + httplib::to_string(res.error()),
                        true);
  }
  return {res->status, res->body};
}

ChatClient::ChatClient(RemoteModelEndpoint endpoint, std::shared_ptr<ChatTransport> transport,
                       RetryPolicy retry, Sleeper sleep)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      retry_(retry),
      sleep_(sleep ? std::move(sleep) : Sleeper([](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
      })) {
  if (!transport_) transport_ = std::make_shared<HttpChatTransport>(endpoint_);
  if (retry_.max_attempts < 1) retry_.max_attempts = 1;
}

std::string ChatClient::request_path() const { return split_url(endpoint_.base_url).path + "/chat/completions"; }

std::string ChatClient::request_body(const std::string& prompt, const SamplingParams& sampling) const {
  json body = {{"model", endpoint_.model},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"temperature", sampling.temperature},
               {"max_tokens", sampling.max_tokens}};
  return body.dump();
}

std::string ChatClient::complete(const std::string& prompt, const SamplingParams& sampling) const {
  std::map<std::string, std::string> headers;
  if (const char* key = std::getenv(endpoint_.api_key_env.c_str()); key && *key) {
    headers["Authorization"] = std::string("Bearer ") + key;
  }
  const auto body = request_body(prompt, sampling);
  const auto path = request_path();

  auto delay = retry_.initial_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      const auto reply = transport_->post(path, body, headers);
      if (reply.status >= 200 && reply.status < 300) return parse_completion(reply.body);
      throw EndpointError("endpoint returned HTTP " + std::to_string(reply.status),
                          retryable_status(reply.status), reply.status);
    } catch (const EndpointError& e) {
      if (!e.retryable() || attempt >= retry_.max_attempts) throw;
    }
    sleep_(delay);
    delay = std::chrono::milliseconds(
        static_cast<std::chrono::milliseconds::rep>(static_cast<double>(delay.count()) * retry_.backoff_factor));
  }
}

std::string parse_completion(const std::string& body) {
  std::string content;
  try {
    const auto j = json::parse(body);
    const auto& message = j.at("choices").at(0).at("message");
    if (message.contains("content") && message.at("content").is_string()) {
      content = message.at("content").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw EndpointError(std::string("malformed completion response: ") + e.what(), false);
  }
  if (content.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ResponseEmpty("model returned an empty completion");
  }
  return content;
}

}  // namespace asmopt::llm
