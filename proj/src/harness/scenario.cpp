#include "adpc/harness/scenario.h"

#include "adpc/agent/agent.h"
#include "adpc/core/digest.h"
#include "adpc/core/error.h"
#include "adpc/core/grammar.h"
#include "adpc/harness/sim_network.h"
#include "adpc/store/atomic_file.h"
#include "adpc/store/decision_store.h"
#include "adpc/store/policy.h"

#include <algorithm>
#include <set>

namespace adpc::harness {

namespace {

using nlohmann::json;

[[noreturn]] void scenario_error(const std::string& msg) { throw Error(ErrorCode::kScenario, msg); }

const std::set<std::string>& known_ops() {
  static const std::set<std::string> ops = {"visit",        "user_decide", "controller_update", "policy_add",
                                            "advance_time", "sync",        "raw_request",       "check"};
  return ops;
}

// Required argument names per assertion kind.
const std::map<std::string, std::vector<std::string>>& assertion_args() {
  static const std::map<std::string, std::vector<std::string>> kinds = {
      {"status", {"origin", "id", "expected"}},
      {"traffic_absent", {"origin"}},
      {"granted", {"origin", "id", "expected"}},
      {"ack_matched", {"origin"}},
      {"chain_valid", {}},
      {"marker", {"origin", "present"}},
      {"prompt", {"origin", "ids"}},
      {"field", {"origin", "expected"}},
      {"sent", {"origin", "expected"}},
      {"support", {"origin", "expected"}},
      {"audit", {"origin", "contains"}},
  };
  return kinds;
}

ConsentRequestsList requests_arg(const json& j, const std::string& where) {
  try {
    return parse_requests_resource(j.dump());
  } catch (const Error& e) {
    scenario_error(where + ": invalid requests: " + e.what());
  }
}

void check_origin_arg(const json& args, const std::set<Origin>& declared, const std::string& where) {
  if (!args.contains("origin")) return;
  if (!args["origin"].is_string()) scenario_error(where + ": 'origin' must be a string");
  Origin o;
  try {
    o = Origin::parse(args["origin"].get<std::string>());
  } catch (const Error& e) {
    scenario_error(where + ": " + e.detail());
  }
  if (!declared.contains(o)) scenario_error(where + ": undeclared origin " + o.to_string());
}

Assertion parse_assertion(const json& j, const std::set<Origin>& declared, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) scenario_error(where + ": missing 'kind'");
  Assertion a{j["kind"].get<std::string>(), j.value("args", json::object())};
  const auto it = assertion_args().find(a.kind);
  if (it == assertion_args().end()) scenario_error(where + ": unknown assertion kind '" + a.kind + "'");
  if (!a.args.is_object()) scenario_error(where + ": 'args' must be an object");
  for (const auto& key : it->second) {
    if (!a.args.contains(key)) scenario_error(where + ": " + a.kind + " needs '" + key + "'");
  }
  check_origin_arg(a.args, declared, where);
  if (a.kind == "status") {
    if (!a.args["expected"].is_string() || !parse_request_status(a.args["expected"].get<std::string>())) {
      scenario_error(where + ": bad expected status");
    }
  }
  if ((a.kind == "granted" && !a.args["expected"].is_boolean()) ||
      (a.kind == "marker" && !a.args["present"].is_boolean())) {
    scenario_error(where + ": expected a boolean");
  }
  if (a.kind == "prompt" && !a.args["ids"].is_array()) scenario_error(where + ": 'ids' must be an array");
  return a;
}

Step parse_step(const json& j, const std::set<Origin>& declared, const std::string& where) {
  if (!j.is_object() || !j.contains("op") || !j["op"].is_string()) scenario_error(where + ": missing 'op'");
  Step s{j["op"].get<std::string>(), j.value("args", json::object())};
  if (!known_ops().contains(s.op)) scenario_error(where + ": unknown op '" + s.op + "'");
  if (!s.args.is_object()) scenario_error(where + ": 'args' must be an object");
  check_origin_arg(s.args, declared, where);

  const bool needs_origin = s.op != "policy_add" && s.op != "advance_time" && s.op != "check";
  if (needs_origin && !s.args.contains("origin")) scenario_error(where + ": " + s.op + " needs 'origin'");
  if (s.op == "user_decide") {
    try {
      agent::decision_input_from_json(s.args);
    } catch (const Error& e) {
      scenario_error(where + ": " + e.detail());
    }
  } else if (s.op == "controller_update") {
    if (!s.args.contains("requests")) scenario_error(where + ": controller_update needs 'requests'");
    requests_arg(s.args["requests"], where);
  } else if (s.op == "policy_add") {
    try {
      json rule = s.args;
      rule["id"] = 0;
      validate(policy_rule_from_json(rule));
    } catch (const Error& e) {
      scenario_error(where + ": " + e.detail());
    }
  } else if (s.op == "advance_time") {
    for (const char* unit : {"days", "hours", "minutes", "seconds"}) {
      if (s.args.contains(unit) && !s.args[unit].is_number_integer()) {
        scenario_error(where + ": '" + unit + "' must be an integer");
      }
    }
  } else if (s.op == "check") {
    parse_assertion(s.args, declared, where);
  }
  return s;
}

}  // namespace

Scenario parse_scenario(const json& j) {
  if (!j.is_object()) scenario_error("scenario must be a JSON object");
  Scenario s;
  if (!j.contains("name") || !j["name"].is_string() || j["name"].get<std::string>().empty()) {
    scenario_error("scenario needs a non-empty 'name'");
  }
  s.name = j["name"].get<std::string>();

  std::set<Origin> declared;
  for (const auto& o : j.value("origins", json::array())) {
    if (!o.is_object() || !o.contains("origin") || !o["origin"].is_string()) {
      scenario_error(s.name + ": origin entry needs 'origin'");
    }
    OriginSpec spec;
    try {
      spec.origin = Origin::parse(o["origin"].get<std::string>());
    } catch (const Error& e) {
      scenario_error(s.name + ": " + e.detail());
    }
    spec.supports_adpc = o.value("supportsAdpc", false);
    if (o.contains("requests")) spec.requests = requests_arg(o["requests"], s.name + " " + spec.origin.to_string());
    if (spec.supports_adpc && !spec.requests) {
      scenario_error(s.name + ": " + spec.origin.to_string() + " supports ADPC but has no requests");
    }
    if (!declared.insert(spec.origin).second) scenario_error(s.name + ": duplicate origin " + spec.origin.to_string());
    s.origins.push_back(std::move(spec));
  }

  const json steps = j.value("steps", json::array());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    s.steps.push_back(parse_step(steps[i], declared, s.name + " step " + std::to_string(i + 1)));
  }
  const json assertions = j.value("assertions", json::array());
  for (std::size_t i = 0; i < assertions.size(); ++i) {
    s.assertions.push_back(parse_assertion(assertions[i], declared, s.name + " assertion " + std::to_string(i + 1)));
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) scenario_error(file.filename().string() + ": not valid JSON");
  return parse_scenario(j);
}

nlohmann::ordered_json to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["pass"] = r.pass;
  j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : r.failures) {
    nlohmann::ordered_json fj;
    fj["step"] = f.step ? nlohmann::ordered_json(*f.step) : nlohmann::ordered_json(nullptr);
    fj["assertion"] = f.assertion ? nlohmann::ordered_json(*f.assertion) : nlohmann::ordered_json(nullptr);
    fj["kind"] = f.kind;
    fj["message"] = f.message;
    j["failures"].push_back(std::move(fj));
  }
  j["trace"] = r.trace;
  return j;
}

namespace {

constexpr Instant kScenarioStart{std::chrono::sys_days{std::chrono::year{2024} / 1 / 1}};

class Runner {
 public:
  explicit Runner(const Scenario& s)
      : scenario_(s), clock_(kScenarioStart), store_(DecisionStore::in_memory(clock_)), net_(clock_),
        agent_(store_, net_) {
    report_.name = s.name;
    for (const auto& o : s.origins) net_.add_origin(o.origin, o.supports_adpc, o.requests);
  }

  Report run() {
    for (std::size_t i = 0; i < scenario_.steps.size(); ++i) {
      const Step& step = scenario_.steps[i];
      try {
        if (auto msg = run_step(step)) fail(i + 1, std::nullopt, step_kind(step), *msg);
      } catch (const std::exception& e) {
        fail(i + 1, std::nullopt, step_kind(step), e.what());
      }
    }
    for (std::size_t i = 0; i < scenario_.assertions.size(); ++i) {
      const Assertion& a = scenario_.assertions[i];
      try {
        if (auto msg = check(a)) fail(std::nullopt, i + 1, a.kind, *msg);
      } catch (const std::exception& e) {
        fail(std::nullopt, i + 1, a.kind, e.what());
      }
    }
    check_invariants();
    report_.trace = net_.trace();
    return std::move(report_);
  }

 private:
  static std::string step_kind(const Step& s) {
    return s.op == "check" ? "check:" + s.args.value("kind", std::string()) : s.op;
  }

  void fail(std::optional<std::size_t> step, std::optional<std::size_t> assertion, std::string kind,
            std::string message) {
    report_.pass = false;
    report_.failures.push_back({step, assertion, std::move(kind), std::move(message)});
  }

  static Origin origin_of(const json& args) { return Origin::parse(args.at("origin").get<std::string>()); }

  std::optional<std::string> expect_error(const json& args, const std::function<void()>& fn) {
    const std::string expected = args.value("expectError", std::string());
    try {
      fn();
    } catch (const Error& e) {
      if (expected.empty()) throw;
      if (to_string(e.code()) != expected) return "expected " + expected + ", got " + e.what();
      return std::nullopt;
    }
    if (!expected.empty()) return "expected " + expected + ", operation succeeded";
    return std::nullopt;
  }

  std::optional<std::string> run_step(const Step& step) {
    const json& a = step.args;
    if (step.op == "visit") {
      const Origin o = origin_of(a);
      const std::string url = o.to_string() + a.value("path", std::string("/"));
      const int times = a.value("times", 1);
      for (int i = 0; i < times; ++i) agent_.visit(url);
    } else if (step.op == "user_decide") {
      const Origin o = origin_of(a);
      return expect_error(a, [&] { agent_.decide(o, agent::decision_input_from_json(a)); });
    } else if (step.op == "controller_update") {
      net_.controller(origin_of(a))->update_requests(requests_arg(a["requests"], "controller_update"));
    } else if (step.op == "policy_add") {
      json rule = a;
      rule["id"] = 0;
      store_.add_policy(policy_rule_from_json(rule));
    } else if (step.op == "advance_time") {
      const std::int64_t secs = a.value("days", 0) * 86400LL + a.value("hours", 0) * 3600LL +
                                a.value("minutes", 0) * 60LL + a.value("seconds", 0);
      clock_.advance(std::chrono::seconds{secs});
    } else if (step.op == "sync") {
      const Origin o = origin_of(a);
      return expect_error(a, [&] { agent_.sync_requests(o); });
    } else if (step.op == "raw_request") {
      http::Request req;
      req.method = a.value("method", std::string("GET"));
      req.url = origin_of(a).to_string() + a.value("path", std::string("/"));
      if (a.contains("adpc")) http::set_header(req.headers, http::kAdpcField, a["adpc"].get<std::string>());
      req.body = a.value("body", std::string());
      net_.send_scripted(req);
    } else if (step.op == "check") {
      return check(Assertion{a.at("kind").get<std::string>(), a.value("args", json::object())});
    }
    return std::nullopt;
  }

  std::optional<std::string> check(const Assertion& as) {
    const json& a = as.args;
    const auto mismatch = [](const json& expected, const json& actual) -> std::optional<std::string> {
      if (expected == actual) return std::nullopt;
      return "expected " + expected.dump() + ", got " + actual.dump();
    };

    if (as.kind == "chain_valid") {
      const ChainVerdict v = store_.verify_chain();
      if (!v.ok) return "agent receipts broken at seq " + std::to_string(v.first_bad_seq) + ": " + v.reason;
      for (const auto* c : net_.controllers()) {
        const ChainVerdict cv = c->verify_audit();
        if (!cv.ok) return c->self().to_string() + " audit broken at seq " + std::to_string(cv.first_bad_seq);
      }
      return std::nullopt;
    }

    const Origin o = origin_of(a);
    const OriginRecord* rec = store_.find(o);
    if (as.kind == "status") {
      const RequestId id(a["id"].get<std::string>());
      const auto s = rec ? rec->decisions.status(id) : std::nullopt;
      return mismatch(a["expected"], s ? json(std::string(to_string(*s))) : json(nullptr));
    }
    if (as.kind == "traffic_absent") {
      const std::string field = a.value("field", std::string(http::kAdpcField));
      for (const auto& e : net_.trace()) {
        if (e["from"] != "agent" || e["origin"] != o.to_string()) continue;
        for (const auto& h : e["requestHeaders"]) {
          if (http::iequals(h[0].get<std::string>(), field)) {
            return "request " + e["n"].dump() + " carried " + field + ": " + h[1].get<std::string>();
          }
        }
      }
      return std::nullopt;
    }
    if (as.kind == "granted") {
      const auto perms = net_.last_permissions(o);
      if (!perms) return std::string("no page request reached ") + o.to_string();
      return mismatch(a["expected"], perms->is_granted(a["id"].get<std::string>()));
    }
    if (as.kind == "ack_matched") return ack_matched(o);
    if (as.kind == "marker") {
      const http::Response* page = net_.last_page(o);
      if (!page) return std::string("no page request reached ") + o.to_string();
      const bool in_body = page->body.find(server::kAnalyticsMarker) != std::string::npos;
      const bool cookie = http::header_value(page->headers, "Set-Cookie").has_value();
      if (in_body != cookie) return std::string("marker and cookie disagree");
      return mismatch(a["present"], in_body);
    }
    if (as.kind == "prompt") {
      json actual = json::array();
      if (rec && rec->prompt) {
        for (const auto& item : rec->prompt->items) actual.push_back(item.id.str());
      }
      return mismatch(a["ids"], actual);
    }
    if (as.kind == "field") {
      const auto f = agent_.prepare_request_fields(o);
      return mismatch(a["expected"], f ? json(*f) : json(nullptr));
    }
    if (as.kind == "sent") {
      json last = nullptr;
      bool seen = false;
      for (const auto& e : net_.trace()) {
        if (e["from"] != "agent" || e["origin"] != o.to_string() || e["method"] != "GET") continue;
        if (rec && rec->support.requests_url && o.to_string() + e["path"].get<std::string>() == *rec->support.requests_url) {
          continue;
        }
        seen = true;
        last = nullptr;
        for (const auto& h : e["requestHeaders"]) {
          if (http::iequals(h[0].get<std::string>(), http::kAdpcField)) last = h[1];
        }
      }
      if (!seen) return std::string("no agent page request to ") + o.to_string();
      return mismatch(a["expected"], last);
    }
    if (as.kind == "support") {
      return mismatch(a["expected"], std::string(to_string(rec ? rec->support.state : SupportState::kUnknown)));
    }
    if (as.kind == "audit") {
      server::Controller* c = net_.controller(o);
      if (!c) return o.to_string() + " has no controller";
      const std::string needle = a["contains"].get<std::string>();
      for (const auto& e : c->audit_events()) {
        if (e.payload.find(needle) != std::string::npos) return std::nullopt;
      }
      return "no audit record contains '" + needle + "'";
    }
    return "unknown assertion kind " + as.kind;
  }

  std::optional<std::string> ack_matched(const Origin& o) {
    const auto& events = store_.log().events();
    const std::string name = o.to_string();
    auto sent = std::find_if(events.rbegin(), events.rend(), [&](const DecisionEvent& e) {
      return e.origin == name && e.direction == EventDirection::kSent;
    });
    if (sent == events.rend()) return "no signal was sent to " + name;
    const std::string digest = canonical_digest(parse_subject_field(sent->payload));
    for (auto it = sent.base(); it != events.end(); ++it) {
      if (it->origin != name || it->direction != EventDirection::kReceived) continue;
      if (it->payload == digest) return std::nullopt;
      return "ack for " + digest + " not matched: " + it->payload;
    }
    return "no ack recorded for " + digest;
  }

  // Checked after every scenario: no signal to non-supporting origins, and
  // every sent event resolved by an ack or an explicit missing-ack mark.
  void check_invariants() {
    std::set<std::string> supporting;
    for (const auto& o : scenario_.origins) {
      if (o.supports_adpc) supporting.insert(o.origin.to_string());
    }
    for (const auto& e : net_.trace()) {
      if (e["from"] != "agent" || supporting.contains(e["origin"].get<std::string>())) continue;
      for (const auto& h : e["requestHeaders"]) {
        if (http::iequals(h[0].get<std::string>(), http::kAdpcField)) {
          fail(std::nullopt, std::nullopt, "invariant",
               "ADPC field sent to non-supporting origin " + e["origin"].get<std::string>());
        }
      }
    }
    std::map<std::string, std::string> open;  // origin -> digest awaiting resolution
    for (const DecisionEvent& e : store_.log().events()) {
      if (e.direction == EventDirection::kSent) {
        if (open.contains(e.origin)) fail(std::nullopt, std::nullopt, "invariant", "unresolved ack before seq " + std::to_string(e.seq));
        open[e.origin] = canonical_digest(parse_subject_field(e.payload));
      } else if (e.direction == EventDirection::kReceived) {
        auto it = open.find(e.origin);
        if (it == open.end() || (e.payload != it->second && e.payload != "missing-ack " + it->second)) {
          fail(std::nullopt, std::nullopt, "invariant", "ack event without matching sent event at seq " + std::to_string(e.seq));
        }
        if (it != open.end()) open.erase(it);
      }
    }
    for (const auto& [origin, digest] : open) {
      fail(std::nullopt, std::nullopt, "invariant", origin + ": sent digest " + digest + " never resolved");
    }
  }

  const Scenario& scenario_;
  ManualClock clock_;
  DecisionStore store_;
  SimulatedNetwork net_;
  agent::Agent agent_;
  Report report_;
};

}  // namespace

Report run_scenario(const Scenario& s) { return Runner(s).run(); }

std::size_t SuiteResult::passed() const {
  return static_cast<std::size_t>(std::count_if(reports.begin(), reports.end(), [](const Report& r) { return r.pass; }));
}

nlohmann::ordered_json SuiteResult::summary() const {
  nlohmann::ordered_json j;
  j["scenarios"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) j["scenarios"].push_back(to_json(r));
  j["passed"] = passed();
  j["failed"] = reports.size() - passed();
  j["exit"] = exit_code;
  if (reports.empty()) j["error"] = "no scenarios";
  return j;
}

SuiteResult run_suite(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorCode::kIo, "no such file or directory: " + path.string());

  std::vector<fs::path> files;
  if (fs::is_directory(path, ec)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }

  SuiteResult result;
  for (const auto& file : files) {
    try {
      result.reports.push_back(run_scenario(load_scenario(file)));
    } catch (const Error& e) {
      Report r;
      r.name = file.filename().string();
      r.pass = false;
      r.failures.push_back({std::nullopt, std::nullopt, "scenario", e.what()});
      result.reports.push_back(std::move(r));
    }
  }
  if (result.reports.empty()) {
    result.exit_code = 2;
  } else {
    result.exit_code = result.passed() == result.reports.size() ? 0 : 1;
  }
  return result;
}

}  // namespace adpc::harness
