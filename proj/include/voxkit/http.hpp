#pragma once

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>

#include <httplib.h>

#include "voxkit/backends.hpp"

namespace voxkit {

// ---------------------------------------------------------------------------
// HTTP chat-completions adapter

struct HttpBackendConfig {
  std::string url;  // e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string api_key;
  std::string model;
  int max_retries = 2;
  double backoff_base_s = 0.25;
  double timeout_s = 60;

  static constexpr const char* kUrlEnv = "VOXKIT_ENDPOINT";
  static constexpr const char* kKeyEnv = "VOXKIT_API_KEY";
  static constexpr const char* kModelEnv = "VOXKIT_MODEL";

  static HttpBackendConfig from_env() {
    HttpBackendConfig c;
    if (const char* v = std::getenv(kUrlEnv)) c.url = v;
    if (const char* v = std::getenv(kKeyEnv)) c.api_key = v;
    if (const char* v = std::getenv(kModelEnv)) c.model = v;
    return c;
  }
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidValue("endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string excerpt(const std::string& body, std::size_t n = 200) {
  return body.size() <= n ? body : body.substr(0, n) + "...";
}

// First message text of a chat-completions style response.
inline std::optional<std::string> first_message_text(const nlohmann::json& j) {
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& c = j["choices"][0];
    if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string())
      return c["message"]["content"].get<std::string>();
    if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
  }
  if (j.contains("message") && j["message"].contains("content") && j["message"]["content"].is_string())
    return j["message"]["content"].get<std::string>();
  if (j.contains("content") && j["content"].is_string()) return j["content"].get<std::string>();
  return std::nullopt;
}

}  // namespace detail

// Posts {model, messages, tools} and returns the first message text.
// Connection failures, 429 and 5xx are retried with exponential backoff.
class HttpBackend final : public PolicyBackend {
 public:
  HttpBackend(HttpBackendConfig config, Clock& clock)
      : config_(std::move(config)), clock_(clock), url_(detail::split_url(config_.url)) {}

  PolicyResponse invoke(const PolicyRequest& request) override {
    nlohmann::json body{{"model", config_.model},
                        {"messages", nlohmann::json::array({{{"role", "user"},
                                                             {"content", request.rendered_context}}})},
                        {"tools", nlohmann::json::array()}};
    for (const auto& t : request.local_tools) {
      json tj = t;
      body["tools"].push_back(nlohmann::json::parse(tj.dump()));
    }
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    int last_status = -1;
    std::string last_body = "connection failed";
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) clock_.sleep_for(config_.backoff_base_s * static_cast<double>(1 << (attempt - 1)));
      httplib::Client client(url_.origin);
      const auto timeout = std::chrono::duration<double>(config_.timeout_s);
      client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      auto res = client.Post(url_.path, headers, payload, "application/json");
      if (!res) {
        last_status = -1;
        last_body = httplib::to_string(res.error());
        continue;
      }
      last_status = res->status;
      last_body = res->body;
      if (res->status == 429 || res->status >= 500) continue;
      if (res->status < 200 || res->status >= 300)
        throw HttpError(res->status, detail::excerpt(res->body));

      nlohmann::json reply;
      try {
        reply = nlohmann::json::parse(res->body);
      } catch (const std::exception&) {
        throw HttpError(res->status, "unparseable body: " + detail::excerpt(res->body));
      }
      auto text = detail::first_message_text(reply);
      if (!text) throw HttpError(res->status, "no message text: " + detail::excerpt(res->body));
      std::size_t tokens = word_count(*text);
      if (reply.contains("usage") && reply["usage"].contains("completion_tokens") &&
          reply["usage"]["completion_tokens"].is_number_unsigned())
        tokens = reply["usage"]["completion_tokens"].get<std::size_t>();
      return PolicyResponse{*text, tokens};
    }
    throw HttpError(last_status, detail::excerpt(last_body));
  }

  const HttpBackendConfig& config() const { return config_; }

 private:
  HttpBackendConfig config_;
  Clock& clock_;
  detail::SplitUrl url_;
};

}  // namespace voxkit
