#include "adpc/agent/local_api.h"

#include "adpc/core/error.h"
#include "adpc/core/grammar.h"
#include "adpc/store/policy.h"

#include <nlohmann/json.hpp>

#include <charconv>
#include <random>

namespace adpc::agent {

std::string random_token() {
  std::random_device rd;
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (int i = 0; i < 32; ++i) out += kHex[rd() & 0xF];
  return out;
}

bool is_loopback_host(std::string_view host) noexcept {
  return host == "127.0.0.1" || host == "::1" || host == "localhost";
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      int v = 0;
      auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
      if (ec == std::errc{} && p == s.data() + i + 3) {
        out += static_cast<char>(v);
        i += 2;
        continue;
      }
    }
    out += s[i] == '+' ? ' ' : s[i];
  }
  return out;
}

namespace {

http::Response json_response(int status, const nlohmann::ordered_json& body) {
  http::Response r;
  r.status = status;
  http::set_header(r.headers, "Content-Type", "application/json");
  r.body = body.dump();
  return r;
}

http::Response error_response(int status, ErrorCode code, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = std::string(to_string(code));
  j["message"] = message;
  return json_response(status, j);
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFetch: return 502;
    case ErrorCode::kIo:
    case ErrorCode::kChainCorrupt:
    case ErrorCode::kLocked: return 500;
    case ErrorCode::kSchema: return 400;
    default: return 422;
  }
}

nlohmann::json parse_body(const http::Request& req) {
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kSchema, "request body is not JSON");
  return j;
}

Origin origin_field(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("origin") || !j["origin"].is_string()) {
    throw Error(ErrorCode::kSchema, "missing 'origin'");
  }
  try {
    return Origin::parse(j["origin"].get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchema, e.detail());
  }
}

}  // namespace

LocalApi::LocalApi(Agent& agent, std::string token)
    : agent_(&agent), token_(token.empty() ? random_token() : std::move(token)) {}

LocalApi::~LocalApi() { stop(); }

http::Response LocalApi::dispatch(const http::Request& req) {
  const auto auth = http::header_value(req.headers, "Authorization");
  if (!auth || *auth != "Bearer " + token_) {
    return json_response(401, {{"error", "unauthorized"}, {"message", "missing or wrong bearer token"}});
  }

  std::string path = url_path(req.url);
  std::string query;
  if (auto q = path.find('?'); q != std::string::npos) {
    query = path.substr(q + 1);
    path.resize(q);
  }
  auto query_param = [&](std::string_view name) -> std::optional<std::string> {
    std::string_view rest = query;
    while (!rest.empty()) {
      const auto amp = rest.find('&');
      const std::string_view kv = amp == std::string_view::npos ? rest : rest.substr(0, amp);
      const auto eq = kv.find('=');
      if (kv.substr(0, eq) == name) return percent_decode(eq == std::string_view::npos ? "" : kv.substr(eq + 1));
      if (amp == std::string_view::npos) break;
      rest.remove_prefix(amp + 1);
    }
    return std::nullopt;
  };

  Agent& agent = *agent_;
  std::lock_guard lock(agent.mutex());
  DecisionStore& store = agent.store();
  try {
    if (req.method == "GET" && path == "/api/origins") {
      auto out = nlohmann::ordered_json::array();
      for (const Origin& o : store.origins()) out.push_back(origin_summary_json(*store.find(o)));
      return json_response(200, out);
    }
    if (req.method == "GET" && path == "/api/prompts") {
      auto out = nlohmann::ordered_json::array();
      for (const auto& p : agent.pending_prompts()) out.push_back(to_json(p));
      return json_response(200, out);
    }
    if (req.method == "POST" && path == "/api/decisions") {
      const auto body = parse_body(req);
      const Origin origin = origin_field(body);
      const SignalSet queued = agent.decide(origin, decision_input_from_json(body));
      return json_response(200, {{"queued", serialize_signal_set(queued)}});
    }
    if (req.method == "GET" && path == "/api/policies") {
      auto out = nlohmann::ordered_json::array();
      for (const auto& rule : store.policies()) out.push_back(to_json(rule));
      return json_response(200, out);
    }
    if (req.method == "POST" && path == "/api/policies") {
      auto body = parse_body(req);
      if (body.is_object()) body["id"] = 0;
      return json_response(200, to_json(store.add_policy(policy_rule_from_json(body))));
    }
    if (req.method == "DELETE" && path.starts_with("/api/policies/")) {
      const std::string id_text = path.substr(std::string_view("/api/policies/").size());
      std::uint64_t id = 0;
      auto [p, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
      if (ec != std::errc{} || p != id_text.data() + id_text.size()) {
        return error_response(400, ErrorCode::kSchema, "bad policy id");
      }
      if (!store.remove_policy(id)) return error_response(404, ErrorCode::kSchema, "no policy " + id_text);
      return json_response(200, {{"removed", id}});
    }
    if (req.method == "GET" && path == "/api/receipts") {
      std::optional<Origin> filter;
      if (auto o = query_param("origin")) filter = Origin::parse(*o);
      http::Response r;
      http::set_header(r.headers, "Content-Type", "application/x-ndjson");
      r.body = store.export_receipts(filter);
      return r;
    }
    if (req.method == "GET" && path == "/api/verify") {
      return json_response(200, to_json(store.verify_chain(), store.log().size()));
    }
    if (req.method == "POST" && path == "/api/sync") {
      const Origin origin = origin_field(parse_body(req));
      const auto prompt = agent.sync_requests(origin);
      nlohmann::ordered_json j;
      j["prompt"] = prompt ? to_json(*prompt) : nlohmann::ordered_json(nullptr);
      return json_response(200, j);
    }
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.code(), e.detail());
  }
  return error_response(404, ErrorCode::kSchema, "no resource " + req.method + " " + path);
}

int LocalApi::bind(const std::string& host, int port) {
  if (!is_loopback_host(host)) throw Error(ErrorCode::kBind, "local API binds loopback only, not " + host);
  server_ = std::make_unique<http::Server>([this](const http::Request& r) { return dispatch(r); });
  return server_->bind(host, port);
}

void LocalApi::start() {
  if (server_) server_->start();
}

void LocalApi::listen() {
  if (server_) server_->listen();
}

void LocalApi::stop() {
  if (server_) server_->stop();
}

}  // namespace adpc::agent
