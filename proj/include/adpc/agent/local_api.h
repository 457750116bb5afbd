#pragma once

#include "adpc/agent/agent.h"
#include "adpc/http/message.h"
#include "adpc/http/server.h"

#include <memory>
#include <string>

namespace adpc::agent {

// 32 hex chars from the system entropy source.
std::string random_token();

// JSON resources for the CLI and dashboard, all under /api and guarded by
// `Authorization: Bearer <token>`:
//   GET    /api/origins               [origin record]
//   GET    /api/prompts               [prompt]
//   POST   /api/decisions             {origin, consent, refuse, withdraw, object, generals} -> {"queued": s}
//   GET    /api/policies              [policy rule]
//   POST   /api/policies              policy rule without id -> stored rule
//   DELETE /api/policies/<id>
//   GET    /api/receipts[?origin=o]   event lines (application/x-ndjson)
//   GET    /api/verify                chain verdict
//   POST   /api/sync                  {origin} -> {"prompt": prompt|null}
// Errors: {"error": "E_...", "message": ...} with 401, 400, 404, 422, 502 or 500.
class LocalApi {
 public:
  // An empty token is replaced with random_token().
  LocalApi(Agent& agent, std::string token = {});
  ~LocalApi();

  http::Response dispatch(const http::Request& request);
  const std::string& token() const noexcept { return token_; }

  // Loopback hosts only; throws Error(kBind) otherwise or when the port is
  // taken. Returns the bound port.
  int bind(const std::string& host, int port);
  void start();   // background thread
  void listen();  // blocks
  void stop();

 private:
  Agent* agent_;
  std::string token_;
  std::unique_ptr<http::Server> server_;
};

bool is_loopback_host(std::string_view host) noexcept;
std::string percent_decode(std::string_view s);

}  // namespace adpc::agent
