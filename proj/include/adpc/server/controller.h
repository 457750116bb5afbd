#pragma once

#include "adpc/core/decision.h"
#include "adpc/core/error.h"
#include "adpc/core/resource.h"
#include "adpc/http/message.h"
#include "adpc/store/clock.h"
#include "adpc/store/event_log.h"
#include "adpc/store/origin.h"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace adpc::server {

inline constexpr std::string_view kDefaultRequestsPath = "/.well-known/adpc.json";

struct ControllerConfig {
  Origin self;
  ConsentRequestsList requests;
  std::string requests_path = std::string(kDefaultRequestsPath);
  std::optional<std::filesystem::path> audit_path;  // in-memory audit when unset
  bool durable_audit = true;
};

struct EffectivePermissions {
  std::map<RequestId, bool> granted;
  bool dnt = false;
  bool do_not_sell = false;

  bool is_granted(std::string_view id) const;
  bool operator==(const EffectivePermissions&) const = default;
};

nlohmann::ordered_json to_json(const EffectivePermissions& p);

// Nothing communicated: consent requests denied, legitimate interests
// not objected to.
EffectivePermissions default_permissions(const ConsentRequestsList& requests);
EffectivePermissions permissions_from(const ConsentRequestsList& requests, const DecisionMap& map);

struct InboundResult {
  EffectivePermissions permissions;
  std::optional<std::string> canonical;   // set when a field parsed
  std::optional<std::string> ack;         // canonical_digest of the parsed set
  std::optional<ErrorCode> malformed;     // field present but unparseable: treated as absent, no ack
  std::optional<ErrorCode> rejected;      // parsed and acked, but not applicable to the current requests
};

// Per-request outcome of the full middleware pipeline.
struct Exchange {
  http::Response response;
  std::optional<EffectivePermissions> permissions;  // page requests only
};

// Controller-side middleware plus the demo site. Decisions are never stored:
// each inbound field is evaluated against an all-pending prior.
class Controller {
 public:
  Controller(ControllerConfig config, const Clock& clock);

  // Adds `ADPC: linked-meta` (merged with an ack when present) and the Link
  // to the requests resource. Replaces any ADPC field already set.
  void announce(http::Response& response, const std::optional<std::string>& ack = std::nullopt) const;

  // Header channel.
  InboundResult handle_inbound(const http::Request& request);
  // Shared by the header and body channels. Never throws for bad input.
  InboundResult handle_signal(std::string_view raw);

  http::Response serve_requests_resource(const http::Request& request) const;
  http::Response demo_behavior(const EffectivePermissions& permissions, const http::Request& request) const;

  Exchange handle_exchange(const http::Request& request);
  http::Response handle(const http::Request& request) { return handle_exchange(request).response; }

  // Loads a fresh requests list (controller-initiated new requests).
  void update_requests(ConsentRequestsList requests);
  std::shared_ptr<const ConsentRequestsList> requests() const;

  const Origin& self() const noexcept { return config_.self; }
  const std::string& requests_path() const noexcept { return config_.requests_path; }

  // Audit log in the decision-store event format.
  ChainVerdict verify_audit() const;
  std::vector<DecisionEvent> audit_events() const;

 private:
  void audit(std::string payload);

  ControllerConfig config_;
  const Clock* clock_;
  mutable std::mutex requests_mutex_;
  std::shared_ptr<const ConsentRequestsList> requests_;
  mutable std::mutex audit_mutex_;
  EventLog audit_;
};

// ETag for a requests list: quoted prefix of the SHA-256 of its wire bytes.
std::string entity_tag(const ConsentRequestsList& requests);

// The demo page's analytics marker and cookie.
inline constexpr std::string_view kAnalyticsMarker = "<div data-adpc-marker=\"analytics\"></div>";
inline constexpr std::string_view kAnalyticsCookie = "adpc_demo_analytics=1; Path=/";

}  // namespace adpc::server
