#include "adpc/store/origin_record.h"

#include "adpc/core/error.h"

namespace adpc {

std::string_view to_string(SupportState s) noexcept {
  switch (s) {
    case SupportState::kUnknown: return "unknown";
    case SupportState::kSupported: return "supported";
    case SupportState::kUnsupported: return "unsupported";
  }
  return "";
}

nlohmann::ordered_json to_json(const PendingPrompt& p) {
  nlohmann::ordered_json j;
  j["origin"] = p.origin.to_string();
  j["version"] = p.version;
  j["items"] = nlohmann::ordered_json::array();
  for (const auto& item : p.items) j["items"].push_back(to_json(item));
  return j;
}

namespace {

nlohmann::ordered_json support_json(const SupportStatus& s) {
  nlohmann::ordered_json j;
  j["state"] = to_string(s.state);
  if (s.requests_url) j["requestsUrl"] = *s.requests_url;
  if (s.expiry) j["expiry"] = format_rfc3339(*s.expiry);
  return j;
}

Instant instant_from(const nlohmann::json& j) {
  auto t = j.is_string() ? parse_rfc3339(j.get<std::string>()) : std::nullopt;
  if (!t) throw Error(ErrorCode::kSchema, "bad timestamp in origin record");
  return *t;
}

ConsentRequestsList requests_from(const nlohmann::json& j) { return parse_requests_resource(j.dump()); }

}  // namespace

nlohmann::ordered_json to_json(const OriginRecord& r) {
  nlohmann::ordered_json j;
  j["origin"] = r.origin.to_string();
  j["support"] = support_json(r.support);
  j["decisions"] = to_json(r.decisions);
  j["lastVersion"] = r.last_resource_version ? nlohmann::ordered_json(*r.last_resource_version) : nlohmann::ordered_json(nullptr);
  j["visits"] = nlohmann::ordered_json::array();
  for (Instant v : r.visits) j["visits"].push_back(format_rfc3339(v));
  if (r.requests) j["requests"] = to_json(*r.requests);
  if (r.etag) j["etag"] = *r.etag;
  if (r.prompt) j["prompt"] = to_json(*r.prompt);
  if (r.prompt_deferred) j["promptDeferred"] = true;
  if (!r.queued.empty()) j["queued"] = r.queued;
  if (r.awaiting_ack) j["awaitingAck"] = *r.awaiting_ack;
  return j;
}

OriginRecord origin_record_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("origin") || !j["origin"].is_string()) {
    throw Error(ErrorCode::kSchema, "origin record lacks 'origin'");
  }
  OriginRecord r;
  r.origin = Origin::parse(j["origin"].get<std::string>());
  if (auto it = j.find("support"); it != j.end()) {
    const auto& s = *it;
    const std::string state = s.value("state", "unknown");
    if (state == "supported") {
      r.support.state = SupportState::kSupported;
    } else if (state == "unsupported") {
      r.support.state = SupportState::kUnsupported;
    }
    if (s.contains("requestsUrl")) r.support.requests_url = s["requestsUrl"].get<std::string>();
    if (s.contains("expiry")) r.support.expiry = instant_from(s["expiry"]);
  }
  if (auto it = j.find("decisions"); it != j.end()) r.decisions = decision_map_from_json(*it);
  if (auto it = j.find("lastVersion"); it != j.end() && it->is_string()) r.last_resource_version = it->get<std::string>();
  if (auto it = j.find("visits"); it != j.end()) {
    for (const auto& v : *it) r.visits.push_back(instant_from(v));
  }
  if (auto it = j.find("requests"); it != j.end()) r.requests = requests_from(*it);
  if (auto it = j.find("etag"); it != j.end()) r.etag = it->get<std::string>();
  if (auto it = j.find("prompt"); it != j.end()) {
    PendingPrompt p;
    p.origin = Origin::parse((*it)["origin"].get<std::string>());
    p.version = (*it)["version"].get<std::string>();
    nlohmann::json doc = {{"version", p.version}, {"consentRequests", (*it)["items"]}};
    p.items = parse_requests_resource(doc.dump()).consent_requests();
    r.prompt = std::move(p);
  }
  r.prompt_deferred = j.value("promptDeferred", false);
  if (auto it = j.find("queued"); it != j.end()) r.queued = it->get<std::vector<std::string>>();
  if (auto it = j.find("awaitingAck"); it != j.end()) r.awaiting_ack = it->get<std::string>();
  return r;
}

}  // namespace adpc
