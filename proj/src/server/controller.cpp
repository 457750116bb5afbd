#include "adpc/server/controller.h"

#include "adpc/core/digest.h"
#include "adpc/core/grammar.h"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace adpc::server {

bool EffectivePermissions::is_granted(std::string_view id) const {
  if (!RequestId::is_valid(id)) return false;
  RequestId rid{std::string(id)};
  auto it = granted.find(rid);
  return it != granted.end() && it->second;
}

nlohmann::ordered_json to_json(const EffectivePermissions& p) {
  nlohmann::ordered_json j;
  j["granted"] = nlohmann::ordered_json::object();
  for (const auto& [id, g] : p.granted) j["granted"][id.str()] = g;
  j["dnt"] = p.dnt;
  j["doNotSell"] = p.do_not_sell;
  return j;
}

EffectivePermissions permissions_from(const ConsentRequestsList& requests, const DecisionMap& map) {
  EffectivePermissions p;
  for (const auto& r : requests.consent_requests()) {
    p.granted[r.id] = map.status(r.id) == RequestStatus::kConsented;
  }
  for (const auto& r : requests.legitimate_interests()) {
    const auto s = map.status(r.id);
    p.granted[r.id] = !s || *s == RequestStatus::kNotObjected;
  }
  p.dnt = map.do_not_track;
  p.do_not_sell = map.do_not_sell;
  return p;
}

EffectivePermissions default_permissions(const ConsentRequestsList& requests) {
  return permissions_from(requests, DecisionMap{});
}

std::string entity_tag(const ConsentRequestsList& requests) {
  return "\"" + sha256_hex(requests.version()).substr(0, 32) + "\"";
}

Controller::Controller(ControllerConfig config, const Clock& clock)
    : config_(std::move(config)),
      clock_(&clock),
      requests_(std::make_shared<const ConsentRequestsList>(config_.requests)),
      audit_(config_.audit_path ? EventLog(*config_.audit_path, config_.durable_audit) : EventLog()) {
  if (config_.requests_path.empty() || config_.requests_path.front() != '/') {
    throw Error(ErrorCode::kSchema, "requests path must be an absolute path: " + config_.requests_path);
  }
}

std::shared_ptr<const ConsentRequestsList> Controller::requests() const {
  std::lock_guard lock(requests_mutex_);
  return requests_;
}

void Controller::update_requests(ConsentRequestsList requests) {
  auto fresh = std::make_shared<const ConsentRequestsList>(std::move(requests));
  std::lock_guard lock(requests_mutex_);
  requests_ = std::move(fresh);
}

void Controller::announce(http::Response& response, const std::optional<std::string>& ack) const {
  MetaAnnouncement meta{true, ack};
  http::set_header(response.headers, http::kAdpcField, serialize_meta(meta));
  http::set_header(response.headers, "Link", "<" + config_.requests_path + ">; rel=\"consent-requests\"");
}

void Controller::audit(std::string payload) {
  std::lock_guard lock(audit_mutex_);
  try {
    audit_.append(config_.self.to_string(), EventDirection::kReceived, std::move(payload),
                  format_rfc3339(clock_->now()));
  } catch (const Error& e) {
    spdlog::error("audit append failed: {}", e.what());
  }
}

InboundResult Controller::handle_signal(std::string_view raw) {
  const auto list = requests();
  InboundResult out;
  SignalSet signal;
  try {
    signal = parse_subject_field(raw);
  } catch (const Error& e) {
    spdlog::warn("ignoring malformed ADPC signal: {}", e.what());
    out.permissions = default_permissions(*list);
    out.malformed = e.code();
    audit("malformed " + std::string(to_string(e.code())));
    return out;
  }
  out.canonical = serialize_signal_set(signal);
  out.ack = canonical_digest(signal);
  try {
    out.permissions = permissions_from(*list, evaluate(*list, signal, DecisionMap{}));
    audit(*out.ack + " " + *out.canonical);
  } catch (const Error& e) {
    // Typically stale ids from an agent that has not seen the current version yet.
    spdlog::warn("ADPC signal does not apply to version {}: {}", list->version(), e.what());
    out.permissions = default_permissions(*list);
    out.rejected = e.code();
    audit("rejected " + std::string(to_string(e.code())) + " " + *out.ack + " " + *out.canonical);
  }
  return out;
}

InboundResult Controller::handle_inbound(const http::Request& request) {
  const auto raw = http::header_value(request.headers, http::kAdpcField);
  if (!raw) {
    InboundResult out;
    out.permissions = default_permissions(*requests());
    return out;
  }
  return handle_signal(*raw);
}

http::Response Controller::serve_requests_resource(const http::Request& request) const {
  const auto list = requests();
  const std::string tag = entity_tag(*list);
  http::Response resp;
  http::set_header(resp.headers, "ETag", tag);
  http::set_header(resp.headers, "Cache-Control", "no-cache");
  const auto inm = http::header_value(request.headers, "If-None-Match");
  if (inm && (*inm == tag || *inm == "*")) {
    resp.status = 304;
  } else {
    resp.status = 200;
    http::set_header(resp.headers, "Content-Type", "application/json");
    if (request.method != "HEAD") resp.body = serialize_requests_resource(*list);
  }
  announce(resp);
  return resp;
}

http::Response Controller::demo_behavior(const EffectivePermissions& permissions, const http::Request&) const {
  http::Response resp;
  resp.status = 200;
  http::set_header(resp.headers, "Content-Type", "text/html; charset=utf-8");
  std::string body = "<!doctype html>\n<html><body><main>" + config_.self.host + "</main>\n";
  if (permissions.is_granted("analytics")) {
    http::add_header(resp.headers, "Set-Cookie", std::string(kAnalyticsCookie));
    body += kAnalyticsMarker;
    body += "\n";
  }
  body += "</body></html>\n";
  resp.body = std::move(body);
  return resp;
}

namespace {

http::Response json_response(int status, const nlohmann::ordered_json& j) {
  http::Response resp;
  resp.status = status;
  http::set_header(resp.headers, "Content-Type", "application/json");
  resp.body = j.dump();
  return resp;
}

}  // namespace

Exchange Controller::handle_exchange(const http::Request& request) {
  std::string path = url_path(request.url);
  if (auto q = path.find('?'); q != std::string::npos) path.resize(q);

  Exchange ex;
  if (path == config_.requests_path) {
    if (request.method == "GET" || request.method == "HEAD") {
      ex.response = serve_requests_resource(request);
      return ex;
    }
    if (request.method == "POST") {
      // Equivalent body channel: {"adpc": "<directives>"} -> {"ack": "<digest>"}.
      const auto body = nlohmann::json::parse(request.body, nullptr, false);
      if (!body.is_object() || !body.contains("adpc") || !body["adpc"].is_string()) {
        ex.response = json_response(400, {{"error", std::string(to_string(ErrorCode::kSchema))}});
      } else {
        const InboundResult in = handle_signal(body["adpc"].get<std::string>());
        if (in.malformed) {
          ex.response = json_response(422, {{"error", std::string(to_string(*in.malformed))}});
        } else {
          nlohmann::ordered_json j;
          j["ack"] = *in.ack;
          j["permissions"] = to_json(in.permissions);
          if (in.rejected) j["rejected"] = std::string(to_string(*in.rejected));
          ex.response = json_response(200, j);
        }
        ex.permissions = in.permissions;
      }
      announce(ex.response);
      return ex;
    }
    ex.response.status = 405;
    http::set_header(ex.response.headers, "Allow", "GET, HEAD, POST");
    announce(ex.response);
    return ex;
  }

  const InboundResult in = handle_inbound(request);
  ex.response = demo_behavior(in.permissions, request);
  ex.permissions = in.permissions;
  announce(ex.response, in.ack);
  return ex;
}

ChainVerdict Controller::verify_audit() const {
  std::lock_guard lock(audit_mutex_);
  return audit_.verify();
}

std::vector<DecisionEvent> Controller::audit_events() const {
  std::lock_guard lock(audit_mutex_);
  return audit_.events();
}

}  // namespace adpc::server
