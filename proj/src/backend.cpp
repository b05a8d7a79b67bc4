#include "privgate/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "privgate/log.hpp"

namespace privgate {

using nlohmann::json;

std::string_view to_string(BackendRole role) noexcept {
  switch (role) {
    case BackendRole::Local: return "local";
    case BackendRole::External: return "external";
    case BackendRole::Judge: return "judge";
  }
  return "";
}

BackendRole parse_backend_role(std::string_view text) {
  for (auto role : {BackendRole::Local, BackendRole::External, BackendRole::Judge}) {
    if (to_string(role) == text) return role;
  }
  throw ConfigError("unknown backend role '" + std::string(text) + "'");
}

std::string_view default_api_key_env(BackendRole role) noexcept {
  switch (role) {
    case BackendRole::Local: return "PRIVGATE_LOCAL_API_KEY";
    case BackendRole::External: return "PRIVGATE_EXTERNAL_API_KEY";
    case BackendRole::Judge: return "PRIVGATE_JUDGE_API_KEY";
  }
  return "";
}

std::string_view to_string(MessageRole role) noexcept {
  switch (role) {
    case MessageRole::System: return "system";
    case MessageRole::User: return "user";
    case MessageRole::Assistant: return "assistant";
  }
  return "";
}

std::optional<ParsedUrl> parse_absolute_url(std::string_view url) {
  const auto sep = url.find("://");
  if (sep == std::string_view::npos || sep == 0) return std::nullopt;
  ParsedUrl out;
  out.scheme = std::string(url.substr(0, sep));
  if (!std::isalpha(static_cast<unsigned char>(out.scheme.front()))) return std::nullopt;
  for (char c : out.scheme) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.')) {
      return std::nullopt;
    }
  }
  std::transform(out.scheme.begin(), out.scheme.end(), out.scheme.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

  std::string_view rest = url.substr(sep + 3);
  const auto slash = static_cast<std::size_t>(std::find(rest.begin(), rest.end(), '/') - rest.begin());
  std::string_view authority = rest.substr(0, slash);
  out.path = std::string(rest.substr(slash));
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  if (authority.empty() || authority.find_first_of(" \t@") != std::string_view::npos) {
    return std::nullopt;
  }

  std::string_view host = authority;
  std::string_view port_text;
  if (authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host = authority.substr(0, close + 1);
    if (close + 1 < authority.size()) {
      if (authority[close + 1] != ':') return std::nullopt;
      port_text = authority.substr(close + 2);
    }
  } else if (const auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    host = authority.substr(0, colon);
    port_text = authority.substr(colon + 1);
  }
  if (host.empty()) return std::nullopt;
  out.host = std::string(host);

  if (!port_text.empty()) {
    int port = 0;
    for (char c : port_text) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      port = port * 10 + (c - '0');
      if (port > 65535) return std::nullopt;
    }
    if (port == 0) return std::nullopt;
    out.port = port;
  } else if (out.scheme == "https") {
    out.port = 443;
  } else if (out.scheme == "http") {
    out.port = 80;
  }
  return out;
}

void validate(const ChatBackendConfig& config) {
  const std::string who = std::string(to_string(config.role)) + " backend";
  if (!parse_absolute_url(config.base_url)) {
    throw ConfigError(who + ": base_url '" + config.base_url + "' is not an absolute URL");
  }
  if (config.model_id.empty()) throw ConfigError(who + ": model_id is empty");
  if (!(config.temperature >= 0.0 && config.temperature <= 2.0)) {
    throw ConfigError(who + ": temperature must lie in [0, 2]");
  }
  if (config.max_tokens <= 0) throw ConfigError(who + ": max_tokens must be positive");
  if (!(config.timeout.count() > 0.0)) throw ConfigError(who + ": timeout must be positive");
  if (config.max_retries < 0) throw ConfigError(who + ": max_retries must be non-negative");
}

std::optional<std::string> resolve_api_key(const ChatBackendConfig& config) {
  if (config.api_key_ref.empty()) return std::nullopt;
  const char* value = std::getenv(config.api_key_ref.c_str());
  if (value == nullptr || *value == '\0') {
    throw ConfigError("secret '" + config.api_key_ref + "' is not set in the environment");
  }
  return std::string(value);
}

std::string redact_key(std::string_view text, const ChatBackendConfig& config) {
  std::optional<std::string> secret;
  try {
    secret = resolve_api_key(config);
  } catch (const ConfigError&) {
    return std::string(text);
  }
  if (!secret || secret->empty()) return std::string(text);

  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (true) {
    const auto hit = text.find(*secret, pos);
    if (hit == std::string_view::npos) break;
    out.append(text.substr(pos, hit - pos));
    out.append("***");
    pos = hit + secret->size();
  }
  out.append(text.substr(pos));
  return out;
}

std::chrono::milliseconds backoff_delay(int retry, Rng& rng) {
  const double base_ms = 1000.0 * std::ldexp(1.0, std::max(retry, 1) - 1);
  const double jitter = uniform_between(rng, 0.8, 1.2);
  return std::chrono::milliseconds(static_cast<long long>(std::llround(base_ms * jitter)));
}

ChatBackend::ChatBackend(ChatBackendConfig config, std::shared_ptr<Transport> transport,
                         std::uint64_t jitter_seed)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      jitter_rng_(jitter_seed),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  validate(config_);
  if (!transport_) throw ConfigError("backend constructed without a transport");
}

void ChatBackend::set_sleeper(Sleeper sleeper) {
  std::lock_guard lock(mutex_);
  sleeper_ = std::move(sleeper);
}

BackendResponse ChatBackend::chat(const std::vector<ChatMessage>& messages,
                                  const CallOptions& options) const {
  if (messages.empty()) throw PreconditionError("chat called without messages");
  if (messages.back().role != MessageRole::User) {
    throw PreconditionError("the last chat message must come from the user");
  }
  for (const auto& m : messages) {
    if (m.role == MessageRole::User && m.content.empty()) {
      throw PreconditionError("user messages must not be empty");
    }
  }

  ChatRequest request{&config_, &messages, options.temperature.value_or(config_.temperature)};
  const auto started = std::chrono::steady_clock::now();
  for (int attempt = 1;; ++attempt) {
    try {
      std::string content = transport_->send(request);
      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - started);
      return BackendResponse{std::move(content), elapsed, attempt};
    } catch (const TransientFailure& e) {
      if (attempt > config_.max_retries) {
        throw TransportError(std::string(to_string(config_.role)) + " backend failed after " +
                             std::to_string(attempt) + " attempts: " + e.what());
      }
      std::chrono::milliseconds delay;
      Sleeper sleeper;
      {
        std::lock_guard lock(mutex_);
        delay = backoff_delay(attempt, jitter_rng_);
        sleeper = sleeper_;
      }
      log().info("{} backend attempt {} failed ({}); retrying in {} ms", to_string(config_.role),
                 attempt, redact_key(e.what(), config_), delay.count());
      sleeper(delay);
    }
  }
}

std::string build_request_body(const ChatBackendConfig& config,
                               const std::vector<ChatMessage>& messages, double temperature) {
  json body;
  body["model"] = config.model_id;
  body["messages"] = json::array();
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  body["temperature"] = temperature;
  body["max_tokens"] = config.max_tokens;
  return body.dump();
}

std::string parse_completion(std::string_view body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded()) throw ProtocolError("response body is not JSON");
  const json* node = &parsed;
  if (!node->contains("choices") || !(*node)["choices"].is_array() || (*node)["choices"].empty()) {
    throw ProtocolError("response has no choices");
  }
  node = &(*node)["choices"][0];
  if (!node->contains("message") || !(*node)["message"].is_object()) {
    throw ProtocolError("first choice has no message");
  }
  node = &(*node)["message"];
  if (!node->contains("content") || !(*node)["content"].is_string()) {
    throw ProtocolError("first choice has no completion text");
  }
  return (*node)["content"].get<std::string>();
}

std::shared_ptr<ChatBackend> make_http_backend(const ChatBackendConfig& config) {
  return std::make_shared<ChatBackend>(config, std::make_shared<HttpTransport>());
}

// ---- mock ----------------------------------------------------------------

MockEntry reply(std::string matcher, std::string text) {
  return MockEntry{std::move(matcher), std::move(text), false};
}

MockEntry failure(std::string matcher, MockFailure::Kind kind, int status) {
  return MockEntry{std::move(matcher), MockFailure{kind, status}, false};
}

MockTransport::MockTransport(std::vector<MockEntry> script)
    : script_(std::move(script)), consumed_(script_.size(), false) {}

std::string MockTransport::send(const ChatRequest& request) {
  std::string last_user;
  for (auto it = request.messages->rbegin(); it != request.messages->rend(); ++it) {
    if (it->role == MessageRole::User) {
      last_user = it->content;
      break;
    }
  }

  std::lock_guard lock(mutex_);
  calls_.push_back(MockCall{*request.messages, last_user, request.temperature});
  for (std::size_t i = 0; i < script_.size(); ++i) {
    if (consumed_[i]) continue;
    const MockEntry& entry = script_[i];
    if (last_user.find(entry.matcher) == std::string::npos) continue;
    if (!entry.repeat) consumed_[i] = true;

    if (const auto* text = std::get_if<std::string>(&entry.outcome)) return *text;
    const auto& fail = std::get<MockFailure>(entry.outcome);
    switch (fail.kind) {
      case MockFailure::Kind::Network:
        throw TransientFailure("scripted network failure");
      case MockFailure::Kind::HttpStatus:
        if (fail.status == 429 || fail.status >= 500) {
          throw TransientFailure("scripted HTTP " + std::to_string(fail.status));
        }
        throw TransportError("scripted HTTP " + std::to_string(fail.status));
      case MockFailure::Kind::MissingContent:
        throw ProtocolError("scripted response without completion text");
    }
  }
  throw ScriptExhausted("no script entry matches the last user message");
}

std::vector<MockCall> MockTransport::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t MockTransport::call_count() const {
  std::lock_guard lock(mutex_);
  return calls_.size();
}

std::size_t MockTransport::remaining() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count(consumed_.begin(), consumed_.end(), false));
}

ChatBackendConfig mock_config(BackendRole role, std::string model_id) {
  ChatBackendConfig config;
  config.role = role;
  config.base_url = "mock://" + std::string(to_string(role));
  config.model_id = std::move(model_id);
  config.temperature =
      role == BackendRole::Judge ? kDeterministicTemperature : kGenerativeTemperature;
  config.max_retries = 3;
  return config;
}

MockBackend make_mock(std::vector<MockEntry> script, ChatBackendConfig config) {
  auto transport = std::make_shared<MockTransport>(std::move(script));
  auto backend = std::make_shared<ChatBackend>(std::move(config), transport);
  backend->set_sleeper([](std::chrono::milliseconds) {});
  return MockBackend{std::move(backend), std::move(transport)};
}

}  // namespace privgate
