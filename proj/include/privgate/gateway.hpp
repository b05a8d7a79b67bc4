#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>

#include "privgate/backend.hpp"
#include "privgate/prompts.hpp"
#include "privgate/serialization.hpp"
#include "privgate/store.hpp"

namespace privgate {

struct ApiResponse {
  int status = 200;
  Json body;
};

struct GatewayDeps {
  const ChatBackend& local;
  const ChatBackend& external;
  const ChatBackend& judge;
  const PromptLibrary& prompts;
  TraceStore& traces;
  AuditStore& audits;
};

// Request handling independent of the HTTP server, so every route can be
// exercised directly.
//
//   POST /v1/delegate     {query, profile_text?, persona?, query_id?, people?}
//   POST /v1/audit        {trace_id}
//   GET  /v1/traces/{id}
//   GET  /v1/traces
//   GET  /v1/report
//   GET  /v1/personas/{name}
class Gateway {
 public:
  explicit Gateway(GatewayDeps deps);

  ApiResponse delegate(const std::string& body);
  ApiResponse audit(const std::string& body);
  ApiResponse trace(const std::string& id) const;
  ApiResponse traces() const;
  ApiResponse report() const;
  ApiResponse persona(const std::string& name) const;

  // Dispatches on method and path; 404 for unknown routes.
  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body);

 private:
  GatewayDeps deps_;
};

// Blocks serving `gateway` until stop() is called from another thread.
class HttpServer {
 public:
  explicit HttpServer(Gateway& gateway);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // port 0 binds an ephemeral port; returns the bound port.
  int bind(const std::string& host, int port);
  void listen_after_bind();
  void stop();
  [[nodiscard]] bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace privgate
