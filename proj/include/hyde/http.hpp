// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include "hyde/error.hpp"

namespace hyde::http {

/// "scheme://host[:port]" plus the request path.
struct Endpoint {
  std::string base;
  std::string path;

  static Endpoint parse(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error("endpoint url '" + url + "' has no scheme");
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw Error("endpoint url '" + url + "': unsupported scheme");
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.base = path_start == std::string::npos ? url : url.substr(0, path_start);
    ep.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (ep.base.size() <= scheme_end + 3) throw Error("endpoint url '" + url + "' has no host");
    return ep;
  }
};

/// Exponential backoff with full jitter: before attempt k+1 sleep a uniform
/// draw from [0, base_delay * 2^(k-1)].
struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };

  std::chrono::milliseconds backoff(int failed_attempts) const {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    const auto cap = base_delay.count() * (std::int64_t{1} << std::min(failed_attempts - 1, 20));
    std::uniform_int_distribution<std::int64_t> dist(0, cap);
    return std::chrono::milliseconds(dist(rng));
  }
};

inline bool is_retryable_status(int status) { return status == 429 || status >= 500; }

inline std::optional<std::string> env(const char* name) {
  if (const char* v = std::getenv(name); v != nullptr && *v != '\0') return std::string(v);
  return std::nullopt;
}

/// POSTs JSON bodies to one endpoint, retrying transport failures and
/// HTTP 429/5xx according to the policy. Stateless between calls.
class JsonClient {
 public:
  JsonClient(Endpoint endpoint, std::optional<std::string> bearer_token, RetryPolicy retry = {},
             std::chrono::seconds timeout = std::chrono::seconds(120))
      : endpoint_(std::move(endpoint)),
        bearer_(std::move(bearer_token)),
        retry_(std::move(retry)),
        timeout_(timeout) {}

  nlohmann::json post(const nlohmann::json& body) const {
    const std::string payload = body.dump();
    httplib::Headers headers;
    if (bearer_) headers.emplace("Authorization", "Bearer " + *bearer_);
    std::string last_error;
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
      httplib::Client client(endpoint_.base);
      client.set_connection_timeout(timeout_);
      client.set_read_timeout(timeout_);
      client.set_write_timeout(timeout_);
      auto res = client.Post(endpoint_.path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
      } else if (res->status >= 200 && res->status < 300) {
        try {
          return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
          throw TransportError(url() + ": invalid JSON response: " + e.what(), attempt);
        }
      } else if (is_retryable_status(res->status)) {
        last_error = "HTTP " + std::to_string(res->status);
      } else {
        throw TransportError(url() + ": HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                             attempt);
      }
      if (attempt < retry_.max_attempts) {
        const auto delay = retry_.backoff(attempt);
        spdlog::warn("{}: {}; retrying in {} ms", url(), last_error, delay.count());
        retry_.sleep(delay);
      }
    }
    throw TransportError(url() + ": " + last_error, retry_.max_attempts);
  }

  std::string url() const { return endpoint_.base + endpoint_.path; }

 private:
  Endpoint endpoint_;
  std::optional<std::string> bearer_;
  RetryPolicy retry_;
  std::chrono::seconds timeout_;
};

}  // namespace hyde::http
