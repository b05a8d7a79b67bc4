#include <httplib.h>

#include <cmath>

#include "privgate/backend.hpp"

namespace privgate {

namespace {

void set_timeouts(httplib::Client& client, std::chrono::duration<double> timeout) {
  const double seconds = timeout.count();
  const auto whole = static_cast<time_t>(std::floor(seconds));
  const auto micros = static_cast<time_t>((seconds - std::floor(seconds)) * 1e6);
  client.set_connection_timeout(whole, micros);
  client.set_read_timeout(whole, micros);
  client.set_write_timeout(whole, micros);
}

}  // namespace

std::string HttpTransport::send(const ChatRequest& request) {
  const ChatBackendConfig& config = *request.config;
  const auto url = parse_absolute_url(config.base_url);
  if (!url || (url->scheme != "http" && url->scheme != "https")) {
    throw ConfigError("unsupported base_url '" + config.base_url + "'");
  }
  const std::optional<std::string> key = resolve_api_key(config);

  const std::string origin = url->scheme + "://" + url->host + ":" + std::to_string(url->port);
  httplib::Client client(origin);
  if (!client.is_valid()) throw ConfigError("cannot build an HTTP client for '" + origin + "'");
  set_timeouts(client, config.timeout);

  httplib::Headers headers;
  if (key) headers.emplace("Authorization", "Bearer " + *key);

  const std::string body = build_request_body(config, *request.messages, request.temperature);
  const auto result =
      client.Post(url->path + "/chat/completions", headers, body, "application/json");
  if (!result) {
    throw TransientFailure("request to " + origin + " failed: " + httplib::to_string(result.error()));
  }
  const int status = result->status;
  if (status == 429 || status >= 500) {
    throw TransientFailure("HTTP " + std::to_string(status) + " from " + origin);
  }
  if (status < 200 || status >= 300) {
    throw TransportError("HTTP " + std::to_string(status) + " from " + origin + ": " +
                         redact_key(result->body.substr(0, 256), config));
  }
  return parse_completion(result->body);
}

}  // namespace privgate
