#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "privgate/backend.hpp"
#include "privgate/core_types.hpp"
#include "privgate/serialization.hpp"

namespace privgate {

inline constexpr const char* kConfigEnv = "PRIVGATE_CONFIG";

// A backend is either a real chat-completions endpoint or, when base_url uses
// the mock:// scheme, a scripted transport declared inline.
struct BackendSpec {
  ChatBackendConfig config;
  std::vector<MockEntry> mock_script;
};

struct GatewayConfig {
  BackendSpec local;
  BackendSpec external;
  BackendSpec judge;
  std::optional<BackendSpec> construction;  // dataset build model; judge when absent
  std::filesystem::path trace_store_path = "traces.jsonl";
  std::filesystem::path audit_store_path = "audits.jsonl";
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  PersonaName default_persona = PersonaName::PrivateUser;
  ProfileTone persona_tone = ProfileTone::Basic;
  std::optional<std::filesystem::path> prompt_dir;
};

// ConfigError when local and external share both endpoint and model, or any
// backend config is invalid.
void validate(const GatewayConfig& config);

// Relative paths resolve against `base_dir`.
GatewayConfig parse_gateway_config(const Json& node, const std::filesystem::path& base_dir = {});
GatewayConfig load_gateway_config(const std::filesystem::path& path);

// Explicit path first, then $PRIVGATE_CONFIG. ConfigError when neither is set.
GatewayConfig resolve_gateway_config(const std::optional<std::filesystem::path>& path);

bool is_mock(const ChatBackendConfig& config);

struct BuiltBackend {
  std::shared_ptr<ChatBackend> backend;
  std::shared_ptr<MockTransport> mock;  // null for HTTP backends
};

BuiltBackend make_backend(const BackendSpec& spec);

struct GatewayBackends {
  BuiltBackend local;
  BuiltBackend external;
  BuiltBackend judge;
  BuiltBackend construction;
};

GatewayBackends make_backends(const GatewayConfig& config);

}  // namespace privgate
