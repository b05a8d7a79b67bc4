#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "privgate/errors.hpp"
#include "privgate/random.hpp"

namespace privgate {

enum class BackendRole { Local, External, Judge };

std::string_view to_string(BackendRole role) noexcept;
BackendRole parse_backend_role(std::string_view text);

// Sampling defaults per call site. Judging and rejection are deterministic,
// generation stages sample.
inline constexpr double kDeterministicTemperature = 0.0;
inline constexpr double kGenerativeTemperature = 0.7;
inline constexpr int kDefaultMaxTokens = 2048;

struct ChatBackendConfig {
  BackendRole role = BackendRole::Local;
  std::string base_url;
  std::string model_id;
  // Name of the environment variable holding the key. Empty means the
  // endpoint takes no Authorization header (typical for local servers).
  std::string api_key_ref;
  double temperature = kGenerativeTemperature;
  int max_tokens = kDefaultMaxTokens;
  std::chrono::duration<double> timeout{120.0};
  int max_retries = 3;
};

// Environment variable conventionally used for each role's key.
std::string_view default_api_key_env(BackendRole role) noexcept;

// Throws ConfigError on a non-absolute URL, out-of-range sampling settings or
// a non-positive timeout.
void validate(const ChatBackendConfig& config);

struct ParsedUrl {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;  // without trailing slash
};

std::optional<ParsedUrl> parse_absolute_url(std::string_view url);

// Resolved secret, or nullopt when the config names none. ConfigError when the
// named variable is unset or empty.
std::optional<std::string> resolve_api_key(const ChatBackendConfig& config);

// Replaces every occurrence of the resolved secret with "***". Never throws.
std::string redact_key(std::string_view text, const ChatBackendConfig& config);

enum class MessageRole { System, User, Assistant };

std::string_view to_string(MessageRole role) noexcept;

struct ChatMessage {
  MessageRole role = MessageRole::User;
  std::string content;
};

struct CallOptions {
  std::optional<double> temperature;
};

struct BackendResponse {
  std::string content;
  std::chrono::milliseconds latency{0};
  int attempt_count = 1;
};

// A single attempt, as handed to a Transport.
struct ChatRequest {
  const ChatBackendConfig* config = nullptr;
  const std::vector<ChatMessage>* messages = nullptr;
  double temperature = 0.0;
};

// Network error, HTTP 429 or HTTP 5xx. The retry loop catches exactly this.
class TransientFailure : public TransportError {
 public:
  using TransportError::TransportError;
  const char* kind() const noexcept override { return "TransientFailure"; }
};

class Transport {
 public:
  virtual ~Transport() = default;
  // Returns the first candidate's completion text. Throws TransientFailure
  // (retryable), TransportError (permanent), ProtocolError or ConfigError.
  virtual std::string send(const ChatRequest& request) = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Delay before retry number `retry` (1-based): 1 s doubling, jittered +-20%.
std::chrono::milliseconds backoff_delay(int retry, Rng& rng);

class ChatBackend {
 public:
  ChatBackend(ChatBackendConfig config, std::shared_ptr<Transport> transport,
              std::uint64_t jitter_seed = 0x5eed);

  ChatBackend(const ChatBackend&) = delete;
  ChatBackend& operator=(const ChatBackend&) = delete;

  // messages must be non-empty and end with a user message (PreconditionError
  // otherwise). Retries transient failures up to max_retries times.
  BackendResponse chat(const std::vector<ChatMessage>& messages, const CallOptions& options = {}) const;

  const ChatBackendConfig& config() const noexcept { return config_; }
  const std::string& model_id() const noexcept { return config_.model_id; }

  void set_sleeper(Sleeper sleeper);

 private:
  ChatBackendConfig config_;
  std::shared_ptr<Transport> transport_;
  mutable std::mutex mutex_;
  mutable Rng jitter_rng_;
  Sleeper sleeper_;
};

// Builds the chat-completions request body: model, messages, temperature,
// max_tokens.
std::string build_request_body(const ChatBackendConfig& config,
                               const std::vector<ChatMessage>& messages, double temperature);

// Extracts choices[0].message.content; ProtocolError if absent.
std::string parse_completion(std::string_view body);

// Talks to {base_url}/chat/completions over HTTP(S).
class HttpTransport : public Transport {
 public:
  std::string send(const ChatRequest& request) override;
};

std::shared_ptr<ChatBackend> make_http_backend(const ChatBackendConfig& config);

// ---- scripted mock -------------------------------------------------------

struct MockFailure {
  enum class Kind { Network, HttpStatus, MissingContent };
  Kind kind = Kind::Network;
  int status = 503;
};

struct MockEntry {
  std::string matcher;  // substring of the last user message; empty matches all
  std::variant<std::string, MockFailure> outcome;
  bool repeat = false;  // repeat entries are matched but never consumed
};

MockEntry reply(std::string matcher, std::string text);
MockEntry failure(std::string matcher, MockFailure::Kind kind = MockFailure::Kind::Network,
                  int status = 503);

struct MockCall {
  std::vector<ChatMessage> messages;
  std::string last_user_message;
  double temperature = 0.0;
};

class MockTransport : public Transport {
 public:
  explicit MockTransport(std::vector<MockEntry> script);

  // Consumes the first entry whose matcher occurs in the last user message;
  // ScriptExhausted when none does.
  std::string send(const ChatRequest& request) override;

  std::vector<MockCall> calls() const;
  std::size_t call_count() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mutex_;
  std::vector<MockEntry> script_;
  std::vector<bool> consumed_;
  std::vector<MockCall> calls_;
};

ChatBackendConfig mock_config(BackendRole role = BackendRole::Local, std::string model_id = "mock");

struct MockBackend {
  std::shared_ptr<ChatBackend> backend;
  std::shared_ptr<MockTransport> transport;

  ChatBackend& operator*() const { return *backend; }
  ChatBackend* operator->() const { return backend.get(); }
};

// Mock backends never sleep between retries.
MockBackend make_mock(std::vector<MockEntry> script, ChatBackendConfig config = mock_config());

}  // namespace privgate
