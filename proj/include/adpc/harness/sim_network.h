#pragma once

#include "adpc/http/message.h"
#include "adpc/server/controller.h"
#include "adpc/store/clock.h"
#include "adpc/store/origin.h"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>

namespace adpc::harness {

// In-process transport: routes each request to the simulated origin it
// names and captures every exchange in a trace.
class SimulatedNetwork final : public http::Client {
 public:
  explicit SimulatedNetwork(const Clock& clock) : clock_(&clock) {}

  // Supporting origins get a Controller; the others serve a plain page.
  void add_origin(const Origin& origin, bool supports_adpc, std::optional<ConsentRequestsList> requests);
  bool has_origin(const Origin& origin) const { return sites_.contains(origin); }

  // nullptr for unknown or non-supporting origins.
  server::Controller* controller(const Origin& origin);
  std::vector<const server::Controller*> controllers() const;

  // Throws Error(kFetch) for undeclared origins.
  http::Response send(const http::Request& request) override;
  // Same, tagged as scripted traffic rather than agent traffic.
  http::Response send_scripted(const http::Request& request);

  // One object per exchange:
  // {n, ts, from, origin, method, path, requestHeaders, requestBody, status, responseHeaders}
  const nlohmann::ordered_json& trace() const noexcept { return trace_; }
  // Agent requests to `origin` only, one compact JSON line each.
  std::string agent_traffic(const Origin& origin) const;

  std::optional<server::EffectivePermissions> last_permissions(const Origin& origin) const;
  const http::Response* last_page(const Origin& origin) const;

 private:
  struct Site {
    bool supports = false;
    std::unique_ptr<server::Controller> controller;
    std::optional<server::EffectivePermissions> last_permissions;
    std::optional<http::Response> last_page;
  };

  http::Response exchange(const http::Request& request, std::string_view from);

  const Clock* clock_;
  std::map<Origin, Site> sites_;
  nlohmann::ordered_json trace_ = nlohmann::ordered_json::array();
};

}  // namespace adpc::harness
