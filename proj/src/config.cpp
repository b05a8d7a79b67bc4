#include "privgate/config.hpp"

#include <cstdlib>

namespace privgate {

bool is_mock(const ChatBackendConfig& config) { return config.base_url.rfind("mock://", 0) == 0; }

void validate(const GatewayConfig& config) {
  for (const BackendSpec* spec : {&config.local, &config.external, &config.judge}) validate(spec->config);
  if (config.construction) validate(config.construction->config);
  if (config.local.config.base_url == config.external.config.base_url &&
      config.local.config.model_id == config.external.config.model_id) {
    throw ConfigError("local and external backends must differ in endpoint or model");
  }
  if (config.listen_port <= 0 || config.listen_port > 65535) throw ConfigError("listen port out of range");
  if (config.trace_store_path.empty()) throw ConfigError("trace_store must be set");
  if (config.trace_store_path == config.audit_store_path) {
    throw ConfigError("trace_store and audit_store must be different files");
  }
}

namespace {

MockEntry parse_mock_entry(const Json& node) {
  const std::string matcher = node.value("match", "");
  MockEntry entry;
  if (node.contains("reply")) {
    entry = reply(matcher, node.at("reply").get<std::string>());
  } else if (node.contains("fail")) {
    const Json& f = node.at("fail");
    if (f.is_number_integer()) {
      entry = failure(matcher, MockFailure::Kind::HttpStatus, f.get<int>());
    } else if (f == "network") {
      entry = failure(matcher, MockFailure::Kind::Network);
    } else if (f == "missing_content") {
      entry = failure(matcher, MockFailure::Kind::MissingContent);
    } else {
      throw ConfigError("unknown mock failure " + f.dump());
    }
  } else {
    throw ConfigError("mock entry needs 'reply' or 'fail'");
  }
  entry.repeat = node.value("repeat", false);
  return entry;
}

BackendSpec parse_backend(const Json& node, BackendRole role) {
  BackendSpec spec;
  ChatBackendConfig& c = spec.config;
  c.role = role;
  c.base_url = node.at("base_url").get<std::string>();
  c.model_id = node.at("model_id").get<std::string>();
  c.api_key_ref = node.value("api_key_env", std::string());
  c.temperature = node.value("temperature", role == BackendRole::Judge ? kDeterministicTemperature
                                                                        : kGenerativeTemperature);
  c.max_tokens = node.value("max_tokens", kDefaultMaxTokens);
  c.timeout = std::chrono::duration<double>(node.value("timeout_s", 120.0));
  c.max_retries = node.value("max_retries", 3);
  if (const auto it = node.find("mock"); it != node.end()) {
    if (!is_mock(c)) throw ConfigError("'mock' scripts need a mock:// base_url");
    for (const auto& e : *it) spec.mock_script.push_back(parse_mock_entry(e));
  }
  return spec;
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base_dir) {
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

}  // namespace

GatewayConfig parse_gateway_config(const Json& node, const std::filesystem::path& base_dir) {
  GatewayConfig cfg;
  try {
    cfg.local = parse_backend(node.at("local"), BackendRole::Local);
    cfg.external = parse_backend(node.at("external"), BackendRole::External);
    cfg.judge = parse_backend(node.at("judge"), BackendRole::Judge);
    if (node.contains("construction")) cfg.construction = parse_backend(node.at("construction"), BackendRole::Judge);
    cfg.trace_store_path = resolve(node.value("trace_store", std::string("traces.jsonl")), base_dir);
    cfg.audit_store_path =
        node.contains("audit_store")
            ? resolve(node.at("audit_store").get<std::string>(), base_dir)
            : std::filesystem::path(cfg.trace_store_path.string() + ".audits");
    if (const auto it = node.find("listen"); it != node.end()) {
      const std::string listen = it->get<std::string>();
      const auto colon = listen.rfind(':');
      if (colon == std::string::npos) throw ConfigError("listen must be host:port");
      cfg.listen_host = listen.substr(0, colon);
      try {
        cfg.listen_port = std::stoi(listen.substr(colon + 1));
      } catch (const std::exception&) {
        throw ConfigError("listen port is not a number");
      }
    }
    if (const auto it = node.find("persona"); it != node.end()) {
      cfg.default_persona = parse_persona_name(it->value("default", std::string("private_user")));
      cfg.persona_tone = parse_tone(it->value("tone", std::string("basic")));
    }
    if (const auto it = node.find("prompt_dir"); it != node.end() && !it->is_null()) {
      cfg.prompt_dir = resolve(it->get<std::string>(), base_dir);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed gateway config: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("malformed gateway config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

GatewayConfig load_gateway_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path.string());
  } catch (const StorageError& e) {
    throw ConfigError(e.what());
  }
  Json node;
  try {
    node = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_gateway_config(node, path.parent_path());
}

GatewayConfig resolve_gateway_config(const std::optional<std::filesystem::path>& path) {
  if (path) return load_gateway_config(*path);
  if (const char* env = std::getenv(kConfigEnv); env && *env) return load_gateway_config(env);
  throw ConfigError(std::string("no config given and ") + kConfigEnv + " is not set");
}

BuiltBackend make_backend(const BackendSpec& spec) {
  if (is_mock(spec.config)) {
    auto mock = make_mock(spec.mock_script, spec.config);
    return {mock.backend, mock.transport};
  }
  return {make_http_backend(spec.config), nullptr};
}

GatewayBackends make_backends(const GatewayConfig& config) {
  GatewayBackends out{make_backend(config.local), make_backend(config.external), make_backend(config.judge), {}};
  out.construction = config.construction ? make_backend(*config.construction) : out.judge;
  return out;
}

}  // namespace privgate
