#include "privgate/gateway.hpp"

#include <httplib.h>

#include "privgate/dataset.hpp"
#include "privgate/log.hpp"

namespace privgate {

namespace {

ApiResponse error_response(int status, std::string_view kind, std::string_view message) {
  return {status, Json{{"error", kind}, {"message", message}}};
}

ApiResponse error_response(int status, const Error& e) { return error_response(status, e.kind(), e.what()); }

std::optional<Json> parse_object(const std::string& body) {
  Json node = Json::parse(body, nullptr, false);
  if (node.is_discarded() || !node.is_object()) return std::nullopt;
  return node;
}

std::optional<std::string> string_member(const Json& node, const char* key) {
  const auto it = node.find(key);
  if (it == node.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

// Backend trouble the caller cannot fix by changing the request.
template <typename F>
ApiResponse upstream_guard(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    return error_response(502, e);
  } catch (const TransportError& e) {
    return error_response(502, e);
  } catch (const ProtocolError& e) {
    return error_response(502, e);
  } catch (const ScriptExhausted& e) {
    return error_response(502, e);
  } catch (const PreconditionError& e) {
    return error_response(400, e);
  } catch (const ValidationError& e) {
    return error_response(400, e);
  } catch (const StorageError& e) {
    log().error("storage failure: {}", e.what());
    return error_response(500, e);
  }
}

}  // namespace

Gateway::Gateway(GatewayDeps deps) : deps_(deps) {}

ApiResponse Gateway::delegate(const std::string& body) {
  const auto node = parse_object(body);
  if (!node) return error_response(400, "ValidationError", "request body must be a JSON object");

  QueryRecord record;
  try {
    record.query = string_member(*node, "query").value_or("");
    record.id = string_member(*node, "query_id").value_or("");
    const std::string profile_text = trim(string_member(*node, "profile_text").value_or(""));
    const auto persona = string_member(*node, "persona");
    if (trim(record.query).empty()) return error_response(400, "ValidationError", "query must be non-empty");
    if (profile_text.empty() && !persona) {
      return error_response(400, "ValidationError", "profile_text or persona is required");
    }
    if (const auto it = node->find("people"); it != node->end() && !it->is_null()) {
      record.people = people_from_json(*it);
    }
    if (persona) {
      const PersonaPolicy policy = persona_policy(parse_persona_name(*persona));
      record.people = apply_persona(std::move(record.people), policy);
      record.profile = profile_text.empty()
                           ? PrivacyProfile{persona_profile_text(policy), std::nullopt, ProfileSource::Persona}
                           : PrivacyProfile{profile_text, std::nullopt, ProfileSource::UserWritten};
    } else {
      record.profile = PrivacyProfile{profile_text, std::nullopt, ProfileSource::UserWritten};
    }
    if (!record.id.empty()) validate(record);
    for (const auto& p : record.people) validate(p);
  } catch (const ValidationError& e) {
    return error_response(400, e);
  }

  return upstream_guard([&] {
    PipelineTrace trace = run_pipeline(record, PipelineBackends{deps_.local, deps_.external}, deps_.prompts);
    const std::string id = deps_.traces.persist(std::move(trace));
    return ApiResponse{200, to_json(*deps_.traces.get(id))};
  });
}

ApiResponse Gateway::audit(const std::string& body) {
  const auto node = parse_object(body);
  if (!node) return error_response(400, "ValidationError", "request body must be a JSON object");
  std::string trace_id;
  try {
    trace_id = string_member(*node, "trace_id").value_or("");
  } catch (const ValidationError& e) {
    return error_response(400, e);
  }
  if (trace_id.empty()) return error_response(400, "ValidationError", "trace_id is required");

  const auto trace = deps_.traces.get(trace_id);
  if (!trace) return error_response(404, "NotFound", "unknown trace '" + trace_id + "'");
  if (count_instances(trace->annotations) == 0) {
    return error_response(409, "NoAnnotations", "trace '" + trace_id + "' has no annotated people");
  }

  return upstream_guard([&] {
    const auto audits = audit_trace(*trace, deps_.judge, deps_.prompts);
    deps_.audits.persist(trace_id, audits);
    Json items = Json::array();
    for (const auto& a : audits) items.push_back(to_json(a));
    return ApiResponse{200, Json{{"trace_id", trace_id},
                                 {"path", to_string(trace->path)},
                                 {"audits", std::move(items)},
                                 {"rates", to_json(leak_rates(audits))}}};
  });
}

ApiResponse Gateway::trace(const std::string& id) const {
  const auto t = deps_.traces.get(id);
  if (!t) return error_response(404, "NotFound", "unknown trace '" + id + "'");
  return {200, to_json(*t)};
}

ApiResponse Gateway::traces() const {
  Json items = Json::array();
  for (const auto& t : deps_.traces.snapshot()) items.push_back(to_json(t));
  return {200, Json{{"traces", std::move(items)}}};
}

ApiResponse Gateway::report() const {
  try {
    return {200, to_json(build_report(deps_.traces.snapshot(), deps_.audits.snapshot(), {}, {}))};
  } catch (const InconsistentUniverse& e) {
    return error_response(409, e);
  }
}

ApiResponse Gateway::persona(const std::string& name) const {
  PersonaPolicy policy;
  try {
    policy = persona_policy(parse_persona_name(name));
  } catch (const ValidationError& e) {
    return error_response(404, "NotFound", e.what());
  }
  Json shared = Json::array();
  for (AttributeType t : kAllAttributeTypes) {
    if (policy.shares(t)) shared.push_back(to_string(t));
  }
  return {200, Json{{"name", to_string(policy.name)},
                    {"shared", std::move(shared)},
                    {"profile_text", persona_profile_text(policy)}}};
}

ApiResponse Gateway::handle(const std::string& method, const std::string& path, const std::string& body) {
  static const std::string kTraces = "/v1/traces/";
  static const std::string kPersonas = "/v1/personas/";
  try {
    if (method == "POST" && path == "/v1/delegate") return delegate(body);
    if (method == "POST" && path == "/v1/audit") return audit(body);
    if (method == "GET" && path == "/v1/traces") return traces();
    if (method == "GET" && path == "/v1/report") return report();
    if (method == "GET" && path.rfind(kTraces, 0) == 0 && path.size() > kTraces.size()) {
      return trace(path.substr(kTraces.size()));
    }
    if (method == "GET" && path.rfind(kPersonas, 0) == 0 && path.size() > kPersonas.size()) {
      return persona(path.substr(kPersonas.size()));
    }
  } catch (const std::exception& e) {
    log().error("unhandled error on {} {}: {}", method, path, e.what());
    return error_response(500, "InternalError", e.what());
  }
  return error_response(404, "NotFound", "no route for " + method + " " + path);
}

struct HttpServer::Impl {
  explicit Impl(Gateway& g) : gateway(g) {}

  Gateway& gateway;
  httplib::Server server;
};

HttpServer::HttpServer(Gateway& gateway) : impl_(std::make_unique<Impl>(gateway)) {
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse out = impl_->gateway.handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  auto& s = impl_->server;
  s.Post("/v1/delegate", forward);
  s.Post("/v1/audit", forward);
  s.Get("/v1/traces", forward);
  s.Get(R"(/v1/traces/([^/]+))", forward);
  s.Get("/v1/report", forward);
  s.Get(R"(/v1/personas/([^/]+))", forward);
  s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    res.set_content(Json{{"error", "NotFound"}, {"message", "no route for " + req.method + " " + req.path}}.dump(),
                    "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen_after_bind() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace privgate
