#include "adpc/harness/sim_network.h"

#include "adpc/core/error.h"

namespace adpc::harness {

void SimulatedNetwork::add_origin(const Origin& origin, bool supports_adpc,
                                  std::optional<ConsentRequestsList> requests) {
  Site site;
  site.supports = supports_adpc;
  if (supports_adpc) {
    if (!requests) throw Error(ErrorCode::kScenario, origin.to_string() + " supports ADPC but has no requests");
    server::ControllerConfig config{.self = origin,
                                    .requests = std::move(*requests),
                                    .requests_path = std::string(server::kDefaultRequestsPath),
                                    .audit_path = std::nullopt,
                                    .durable_audit = false};
    site.controller = std::make_unique<server::Controller>(std::move(config), *clock_);
  }
  sites_[origin] = std::move(site);
}

server::Controller* SimulatedNetwork::controller(const Origin& origin) {
  auto it = sites_.find(origin);
  return it == sites_.end() ? nullptr : it->second.controller.get();
}

std::vector<const server::Controller*> SimulatedNetwork::controllers() const {
  std::vector<const server::Controller*> out;
  for (const auto& [o, site] : sites_) {
    if (site.controller) out.push_back(site.controller.get());
  }
  return out;
}

namespace {

nlohmann::ordered_json headers_json(const http::Headers& headers) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& [k, v] : headers) out.push_back(nlohmann::ordered_json::array({k, v}));
  return out;
}

http::Response plain_page(const Origin& origin) {
  http::Response resp;
  http::set_header(resp.headers, "Content-Type", "text/html; charset=utf-8");
  resp.body = "<!doctype html>\n<html><body><main>" + origin.host + "</main>\n</body></html>\n";
  return resp;
}

}  // namespace

http::Response SimulatedNetwork::exchange(const http::Request& request, std::string_view from) {
  Origin origin;
  try {
    origin = Origin::parse(request.url);
  } catch (const Error& e) {
    throw Error(ErrorCode::kFetch, e.detail());
  }
  auto it = sites_.find(origin);
  if (it == sites_.end()) throw Error(ErrorCode::kFetch, "no simulated origin " + origin.to_string());
  Site& site = it->second;

  http::Response resp;
  if (site.controller) {
    server::Exchange ex = site.controller->handle_exchange(request);
    resp = std::move(ex.response);
    if (ex.permissions) {
      site.last_permissions = ex.permissions;
      site.last_page = resp;
    }
  } else {
    resp = plain_page(origin);
    site.last_page = resp;
  }

  nlohmann::ordered_json entry;
  entry["n"] = trace_.size() + 1;
  entry["ts"] = format_rfc3339(clock_->now());
  entry["from"] = from;
  entry["origin"] = origin.to_string();
  entry["method"] = request.method;
  entry["path"] = url_path(request.url);
  entry["requestHeaders"] = headers_json(request.headers);
  entry["requestBody"] = request.body;
  entry["status"] = resp.status;
  entry["responseHeaders"] = headers_json(resp.headers);
  trace_.push_back(std::move(entry));
  return resp;
}

http::Response SimulatedNetwork::send(const http::Request& request) { return exchange(request, "agent"); }
http::Response SimulatedNetwork::send_scripted(const http::Request& request) { return exchange(request, "script"); }

std::string SimulatedNetwork::agent_traffic(const Origin& origin) const {
  const std::string name = origin.to_string();
  std::string out;
  for (const auto& e : trace_) {
    if (e["from"] != "agent" || e["origin"] != name) continue;
    nlohmann::ordered_json req;
    req["method"] = e["method"];
    req["path"] = e["path"];
    req["headers"] = e["requestHeaders"];
    req["body"] = e["requestBody"];
    out += req.dump();
    out += '\n';
  }
  return out;
}

std::optional<server::EffectivePermissions> SimulatedNetwork::last_permissions(const Origin& origin) const {
  auto it = sites_.find(origin);
  return it == sites_.end() ? std::nullopt : it->second.last_permissions;
}

const http::Response* SimulatedNetwork::last_page(const Origin& origin) const {
  auto it = sites_.find(origin);
  if (it == sites_.end() || !it->second.last_page) return nullptr;
  return &*it->second.last_page;
}

}  // namespace adpc::harness
