#include "adpc/agent/agent.h"
#include "adpc/core/digest.h"
#include "adpc/core/grammar.h"
#include "adpc/harness/sim_network.h"

#include "support/expect_error.h"
#include "support/generators.h"
#include "support/temp_dir.h"

#include <catch2/catch_amalgamated.hpp>
#include <spdlog/spdlog.h>

#include <random>

using namespace adpc;
using adpc::agent::Agent;
using adpc::agent::DecisionInput;
using adpc::testing::error_of;
using adpc::testing::make_list;
using adpc::testing::make_request;

namespace {

const Instant kStart{std::chrono::sys_days{std::chrono::year{2024} / 1 / 1}};
const Origin kShop = Origin::parse("https://shop.example");
const Origin kPlain = Origin::parse("https://plain.example");

struct QuietLogs {
  QuietLogs() { spdlog::set_level(spdlog::level::off); }
  ~QuietLogs() { spdlog::set_level(spdlog::level::info); }
};

// One agent wired to a simulated network with a supporting and a
// non-supporting origin.
struct World {
  explicit World(ConsentRequestsList list = make_list("v1", {"x", "y", "z"}))
      : clock(kStart), store(DecisionStore::in_memory(clock)), net(clock), agent(store, net) {
    net.add_origin(kShop, true, std::move(list));
    net.add_origin(kPlain, false, std::nullopt);
  }

  std::optional<RequestStatus> status(const char* id) const {
    const OriginRecord* r = store.find(kShop);
    return r ? r->decisions.status(RequestId(id)) : std::nullopt;
  }
  std::size_t events() const { return store.log().size(); }
  const DecisionEvent& last_event() const { return store.log().events().back(); }

  std::optional<std::string> last_sent_field(const Origin& o) const {
    std::optional<std::string> out;
    for (const auto& e : net.trace()) {
      if (e["origin"] != o.to_string() || e["path"] != "/") continue;
      out.reset();
      for (const auto& h : e["requestHeaders"]) {
        if (h[0] == "ADPC") out = h[1].get<std::string>();
      }
    }
    return out;
  }

  ManualClock clock;
  DecisionStore store;
  harness::SimulatedNetwork net;
  Agent agent;
};

DecisionInput consent(std::vector<std::string> ids) {
  DecisionInput in;
  in.consent = std::move(ids);
  return in;
}

}  // namespace

TEST_CASE("no field on first contact or to unsupported origins", "[agent][fingerprinting]") {
  World w;
  CHECK_FALSE(w.agent.prepare_request_fields(kShop));
  CHECK_FALSE(w.agent.prepare_request_fields(kPlain));

  for (int i = 0; i < 10; ++i) w.agent.visit("https://plain.example/page");
  CHECK(w.store.find(kPlain)->support.state == SupportState::kUnsupported);
  CHECK_FALSE(w.agent.prepare_request_fields(kPlain));
  for (const auto& e : w.net.trace()) CHECK(e["requestHeaders"].empty());
}

TEST_CASE("discovery, prompt, decision and ack round trip", "[agent]") {
  World w;
  w.agent.visit("https://shop.example/");

  const OriginRecord* rec = w.store.find(kShop);
  REQUIRE(rec);
  CHECK(rec->support.state == SupportState::kSupported);
  CHECK(rec->support.requests_url == "https://shop.example/.well-known/adpc.json");
  CHECK(rec->support.expiry == kStart + std::chrono::hours{24});
  CHECK(rec->last_resource_version == "v1");
  REQUIRE(rec->prompt);
  CHECK(rec->prompt->items.size() == 3);
  CHECK(w.store.log().events().front().direction == EventDirection::kResourceSeen);

  // Supported but nothing decided: absence means no consent.
  CHECK_FALSE(w.agent.prepare_request_fields(kShop));

  DecisionInput in;
  in.consent = {"x"};
  in.refuse = {"y"};
  const SignalSet queued = w.agent.decide(kShop, in);
  CHECK(serialize_signal_set(queued) == "consent=x, refuse=y");
  CHECK(w.agent.queued(kShop) == std::vector<std::string>{"consent=x, refuse=y"});
  CHECK(w.last_event().direction == EventDirection::kUserDecided);
  CHECK(w.agent.prepare_request_fields(kShop) == "consent=x, refuse=y");
  REQUIRE(w.store.find(kShop)->prompt);
  CHECK(w.store.find(kShop)->prompt->items.size() == 1);  // z still pending

  w.agent.visit("https://shop.example/");
  CHECK(w.last_sent_field(kShop) == "consent=x, refuse=y");
  CHECK(w.agent.queued(kShop).empty());
  const auto& events = w.store.log().events();
  const std::string digest = canonical_digest(parse_subject_field("consent=x, refuse=y"));
  auto sent = std::find_if(events.begin(), events.end(), [](const auto& e) { return e.direction == EventDirection::kSent; });
  REQUIRE(sent != events.end());
  CHECK(sent->payload == "consent=x, refuse=y");
  REQUIRE(std::next(sent) != events.end());
  CHECK(std::next(sent)->direction == EventDirection::kReceived);
  CHECK(std::next(sent)->payload == digest);
  CHECK_FALSE(w.store.find(kShop)->awaiting_ack);
  CHECK(w.net.last_permissions(kShop)->is_granted("x"));
  CHECK_FALSE(w.net.last_permissions(kShop)->is_granted("y"));
  CHECK(w.store.verify_chain().ok);
}

TEST_CASE("prepare emits the full stored state", "[agent][prepare]") {
  World w;
  w.agent.visit("https://shop.example/");
  w.agent.decide(kShop, consent({"x"}));
  DecisionInput refuse;
  refuse.refuse = {"z"};
  w.agent.decide(kShop, refuse);
  CHECK(w.agent.prepare_request_fields(kShop) == "consent=x, refuse=z");
}

TEST_CASE("subject-initiated withdrawal", "[agent][withdraw]") {
  World w(ConsentRequestsList("v1", {make_request("analytics", {"tracking"})}));
  w.agent.visit("https://shop.example/");
  w.agent.decide(kShop, consent({"analytics"}));
  w.agent.visit("https://shop.example/");
  CHECK(w.net.last_page(kShop)->body.find(server::kAnalyticsMarker) != std::string::npos);

  DecisionInput in;
  in.withdraw = {"analytics"};
  CHECK(serialize_signal_set(w.agent.decide(kShop, in)) == "withdraw=analytics");
  CHECK(w.status("analytics") == RequestStatus::kWithdrawn);
  w.agent.visit("https://shop.example/");
  CHECK(w.last_sent_field(kShop) == "withdraw=analytics");
  CHECK_FALSE(w.net.last_permissions(kShop)->is_granted("analytics"));
  CHECK(w.net.last_page(kShop)->body.find(server::kAnalyticsMarker) == std::string::npos);
}

TEST_CASE("decide is atomic on error", "[agent][decide]") {
  World w(ConsentRequestsList("v1", {make_request("x"), make_request("y")}, {make_request("li")}));
  w.agent.visit("https://shop.example/");
  w.agent.decide(kShop, consent({"x"}));
  const auto before = *w.store.find(kShop);
  const auto events = w.events();

  DecisionInput object;
  object.object = {"x"};
  CHECK(error_of([&] { w.agent.decide(kShop, object); }) == ErrorCode::kWrongBasis);

  DecisionInput mixed;
  mixed.consent = {"y"};
  mixed.refuse = {"x"};  // refuse after consent
  CHECK(error_of([&] { w.agent.decide(kShop, mixed); }) == ErrorCode::kBadTransition);

  CHECK(error_of([&] { w.agent.decide(kShop, consent({"nope"})); }) == ErrorCode::kUnknownId);
  CHECK(error_of([&] { w.agent.decide(kShop, DecisionInput{}); }) == ErrorCode::kEmpty);
  CHECK(error_of([&] { w.agent.decide(kShop, consent({"bad id"})); }) == ErrorCode::kSyntax);
  CHECK(error_of([&] { w.agent.decide(kPlain, consent({"x"})); }) == ErrorCode::kNotSupported);

  CHECK(*w.store.find(kShop) == before);
  CHECK(w.events() == events);

  try {
    w.agent.decide(kShop, object);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'x'") != std::string::npos);
  }
}

TEST_CASE("sync is idempotent and detects new requests", "[agent][sync]") {
  World w(make_list("v1", {"x", "y"}));
  w.agent.visit("https://shop.example/");
  DecisionInput in;
  in.consent = {"x"};
  in.refuse = {"y"};
  w.agent.decide(kShop, in);

  const auto events = w.events();
  CHECK_FALSE(w.agent.sync_requests(kShop));
  CHECK(w.events() == events);
  CHECK_FALSE(w.store.find(kShop)->prompt);

  w.net.controller(kShop)->update_requests(make_list("v2", {"x", "y", "newsletter"}));
  const auto prompt = w.agent.sync_requests(kShop);
  REQUIRE(prompt);
  REQUIRE(prompt->items.size() == 1);
  CHECK(prompt->items[0].id.str() == "newsletter");
  CHECK(prompt->version == "v2");
  CHECK(w.last_event().direction == EventDirection::kResourceSeen);
  CHECK(w.last_event().payload == "v2");
  CHECK(w.status("x") == RequestStatus::kConsented);
  CHECK(w.status("newsletter") == RequestStatus::kPending);
  CHECK(w.agent.pending_prompts().size() == 1);
}

TEST_CASE("reconciliation drops removed ids and re-asks only for changed text", "[agent][sync]") {
  World w(make_list("v1", {"x", "y", "z"}));
  w.agent.visit("https://shop.example/");
  DecisionInput in;
  in.refuse = {"x", "y"};
  in.consent = {"z"};
  w.agent.decide(kShop, in);

  std::vector<ConsentRequest> v2 = {make_request("x"), make_request("y")};
  v2[1].text = "Reworded: may we use y?";
  w.net.controller(kShop)->update_requests(ConsentRequestsList("v2", v2));
  const auto prompt = w.agent.sync_requests(kShop);

  CHECK(w.status("x") == RequestStatus::kRefused);
  CHECK(w.status("y") == RequestStatus::kPending);
  CHECK_FALSE(w.status("z"));
  REQUIRE(prompt);
  REQUIRE(prompt->items.size() == 1);
  CHECK(prompt->items[0].id.str() == "y");
  CHECK(w.agent.prepare_request_fields(kShop) == "refuse=x");
}

TEST_CASE("whitelist answers new requests without a prompt", "[agent][policy]") {
  World w(make_list("v1", {"base"}));
  w.store.add_policy(PolicyRule{0, "shop.example", Whitelist{}});
  w.agent.visit("https://shop.example/");
  CHECK(w.status("base") == RequestStatus::kConsented);

  w.net.controller(kShop)->update_requests(make_list("v2", {"base", "b", "a"}));
  w.store.record(kShop).queued.clear();
  CHECK_FALSE(w.agent.sync_requests(kShop));
  CHECK(w.agent.queued(kShop) == std::vector<std::string>{R"(consent="a b")"});
  CHECK(w.agent.pending_prompts().empty());
}

TEST_CASE("blacklist refuses everything undecided", "[agent][policy]") {
  World w(ConsentRequestsList("v1", {make_request("x")}, {make_request("li")}));
  w.store.add_policy(PolicyRule{0, "*.example", Blacklist{}});
  w.agent.visit("https://shop.example/");
  CHECK(w.status("x") == RequestStatus::kRefused);
  CHECK(w.status("li") == RequestStatus::kObjected);
  CHECK(w.agent.pending_prompts().empty());
  CHECK(w.agent.prepare_request_fields(kShop) == "refuse=x, object=li");
}

TEST_CASE("prompt threshold holds prompts back until visits accumulate", "[agent][policy]") {
  World w;
  w.store.add_policy(PolicyRule{0, "shop.example", PromptThreshold{3, 7}});
  w.agent.visit("https://shop.example/");
  CHECK(w.agent.pending_prompts().empty());
  CHECK(w.store.find(kShop)->prompt_deferred);

  w.agent.visit("https://shop.example/");  // same day: not counted
  CHECK(w.agent.pending_prompts().empty());
  w.clock.advance(std::chrono::hours{24});
  w.agent.visit("https://shop.example/");
  CHECK(w.agent.pending_prompts().empty());
  w.clock.advance(std::chrono::hours{24});
  w.agent.visit("https://shop.example/");
  REQUIRE(w.agent.pending_prompts().size() == 1);
  CHECK(w.agent.pending_prompts()[0].items.size() == 3);
}

TEST_CASE("observe_response classifies announcements", "[agent][observe]") {
  QuietLogs quiet;
  World w;
  auto observe = [&](http::Headers headers) {
    return w.agent.observe_response(kShop, headers, http::link_targets(headers));
  };

  CHECK(observe({{"ADPC", "linked-meta"}, {"Link", "</adpc.json>; rel=\"consent-requests\""}}).requests_url ==
        "https://shop.example/adpc.json");
  CHECK(observe({{"ADPC", "linked-meta"}, {"Link", "<https://shop.example/r>; rel=\"preload consent-requests\""}})
            .state == SupportState::kSupported);
  CHECK(observe({}).state == SupportState::kUnsupported);
  CHECK(observe({{"ADPC", "linked-meta"}}).state == SupportState::kUnsupported);
  CHECK(observe({{"ADPC", "linked-meta"}, {"Link", "<https://evil.example/r>; rel=consent-requests"}}).state ==
        SupportState::kUnsupported);
  CHECK(observe({{"ADPC", "consent=x"}, {"Link", "</r>; rel=consent-requests"}}).state ==
        SupportState::kUnsupported);
  const SupportStatus s = observe({{"ADPC", "linked-meta"}, {"Link", "</r>; rel=consent-requests"}});
  CHECK(s.expiry == kStart + std::chrono::hours{24});
  CHECK(s.requests_url);
}

TEST_CASE("ack mismatch is recorded as missing", "[agent][ack]") {
  QuietLogs quiet;
  World w;
  w.agent.visit("https://shop.example/");
  w.agent.decide(kShop, consent({"x"}));
  w.store.record(kShop).awaiting_ack = canonical_digest(parse_subject_field("consent=x"));
  w.agent.observe_response(kShop, {{"ADPC", "linked-meta, ack=0000000000000000"}, {"Link", "</r>; rel=consent-requests"}},
                           {{"consent-requests", "/r"}});
  CHECK(w.last_event().direction == EventDirection::kReceived);
  CHECK(w.last_event().payload == "missing-ack " + canonical_digest(parse_subject_field("consent=x")));

  // An ack nobody asked for is not recorded.
  const auto events = w.events();
  w.agent.observe_response(kShop, {{"ADPC", "linked-meta, ack=0000000000000000"}}, {{"consent-requests", "/r"}});
  CHECK(w.events() == events);
}

TEST_CASE("support cache expires after the TTL", "[agent][ttl]") {
  World w;
  w.agent.visit("https://shop.example/");
  w.agent.decide(kShop, consent({"x"}));
  CHECK(w.agent.prepare_request_fields(kShop));
  w.clock.advance(std::chrono::hours{24});
  CHECK_FALSE(w.agent.prepare_request_fields(kShop));
  CHECK(error_of([&] { w.agent.sync_requests(kShop); }) == ErrorCode::kNotSupported);

  // Revalidated by the next response.
  w.agent.visit("https://shop.example/");
  CHECK(w.last_sent_field(kShop) == std::nullopt);
  CHECK(w.agent.prepare_request_fields(kShop) == "consent=x");
}

namespace {

// Wraps a client and fails requests for one path.
class FlakyClient final : public http::Client {
 public:
  FlakyClient(http::Client& inner, std::string path, int status) : inner_(&inner), path_(std::move(path)), status_(status) {}
  http::Response send(const http::Request& r) override {
    if (failing && url_path(r.url) == path_) {
      if (status_ == 0) throw Error(ErrorCode::kFetch, "connection refused");
      http::Response resp;
      resp.status = status_;
      return resp;
    }
    return inner_->send(r);
  }
  bool failing = false;

 private:
  http::Client* inner_;
  std::string path_;
  int status_;
};

}  // namespace

TEST_CASE("fetch failures keep stale state", "[agent][sync]") {
  QuietLogs quiet;
  for (int status : {0, 500}) {
    ManualClock clock(kStart);
    DecisionStore store = DecisionStore::in_memory(clock);
    harness::SimulatedNetwork net(clock);
    net.add_origin(kShop, true, make_list("v1", {"x"}));
    FlakyClient flaky(net, "/.well-known/adpc.json", status);
    Agent agent(store, flaky);
    agent.visit("https://shop.example/");
    agent.decide(kShop, consent({"x"}));

    net.controller(kShop)->update_requests(make_list("v2", {"x", "y"}));
    flaky.failing = true;
    const auto before = *store.find(kShop);
    CHECK(error_of([&] { agent.sync_requests(kShop); }) == ErrorCode::kFetch);
    CHECK(*store.find(kShop) == before);
    agent.visit("https://shop.example/");  // sync failure inside a visit is not fatal
    CHECK(store.find(kShop)->last_resource_version == "v1");
  }
}

TEST_CASE("transport failure marks the ack missing", "[agent][ack]") {
  QuietLogs quiet;
  ManualClock clock(kStart);
  DecisionStore store = DecisionStore::in_memory(clock);
  harness::SimulatedNetwork net(clock);
  net.add_origin(kShop, true, make_list("v1", {"x"}));
  FlakyClient flaky(net, "/", 0);
  Agent agent(store, flaky);
  agent.visit("https://shop.example/");
  agent.decide(kShop, consent({"x"}));
  flaky.failing = true;
  CHECK(error_of([&] { agent.visit("https://shop.example/"); }) == ErrorCode::kFetch);
  CHECK(store.log().events().back().payload.starts_with("missing-ack "));
  CHECK_FALSE(store.find(kShop)->awaiting_ack);
}

TEST_CASE("emitted fields reproduce stored statuses", "[agent][property]") {
  // A stateless controller evaluates against an all-pending prior, so a
  // withdrawn id reads back as pending: not granted either way.
  std::mt19937_64 rng(99);
  const std::vector<std::string> consent_ids = {"a", "b", "c", "d"};
  const std::vector<std::string> li_ids = {"p", "q"};
  for (int trial = 0; trial < 100; ++trial) {
    World w(make_list("v1", consent_ids, li_ids));
    w.agent.visit("https://shop.example/");
    for (int step = 0; step < 8; ++step) {
      DecisionInput in;
      const auto& pool = rng() % 3 == 0 ? li_ids : consent_ids;
      const std::string id = pool[rng() % pool.size()];
      if (&pool == &li_ids) {
        in.object = {id};
      } else {
        switch (rng() % 3) {
          case 0: in.consent = {id}; break;
          case 1: in.refuse = {id}; break;
          default: in.withdraw = {id}; break;
        }
      }
      if (rng() % 5 == 0) in.generals = {rng() % 2 ? "do-not-track" : "do-not-sell"};
      try {
        w.agent.decide(kShop, in);
      } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::kBadTransition);
      }
      w.agent.visit("https://shop.example/");

      const auto field = w.last_sent_field(kShop);
      const OriginRecord& rec = *w.store.find(kShop);
      if (!field) continue;
      const DecisionMap seen = evaluate(*rec.requests, parse_subject_field(*field), DecisionMap{});
      for (const auto& [rid, stored] : rec.decisions.statuses) {
        if (stored == RequestStatus::kPending || stored == RequestStatus::kNotObjected) continue;
        if (stored == RequestStatus::kWithdrawn) {
          REQUIRE(seen.status(rid) == RequestStatus::kPending);
        } else {
          REQUIRE(seen.status(rid) == stored);
        }
      }
      REQUIRE(seen.do_not_track == rec.decisions.do_not_track);
      REQUIRE(seen.do_not_sell == rec.decisions.do_not_sell);
    }
  }
}

TEST_CASE("decisions survive a store reopen", "[agent][persistence]") {
  adpc::testing::TempDir dir;
  ManualClock clock(kStart);
  harness::SimulatedNetwork net(clock);
  net.add_origin(kShop, true, make_list("v1", {"x", "y"}));
  {
    DecisionStore store = DecisionStore::open(dir.path(), clock, {.durable = false});
    Agent agent(store, net);
    agent.visit("https://shop.example/");
    agent.decide(kShop, consent({"x"}));
  }
  DecisionStore store = DecisionStore::open(dir.path(), clock, {.durable = false});
  Agent agent(store, net);
  CHECK(agent.prepare_request_fields(kShop) == "consent=x");
  CHECK(agent.pending_prompts().size() == 1);
  CHECK(agent.queued(kShop) == std::vector<std::string>{"consent=x"});
  CHECK(store.verify_chain().ok);
}

TEST_CASE("decision input JSON", "[agent][input]") {
  const auto in = agent::decision_input_from_json(
      nlohmann::json::parse(R"({"origin":"https://a.example","consent":["x"],"generals":["reject-all"]})"));
  CHECK(serialize_signal_set(in.to_signal_set()) == "reject-all, consent=x");
  CHECK(error_of([] { agent::decision_input_from_json(nlohmann::json::parse(R"({"consent":"x"})")); }) ==
        ErrorCode::kSchema);
  CHECK(error_of([] { agent::decision_input_from_json(nlohmann::json::array()); }) == ErrorCode::kSchema);
  DecisionInput bad;
  bad.generals = {"reject-some"};
  CHECK(error_of([&] { bad.to_signal_set(); }) == ErrorCode::kSyntax);
  DecisionInput conflict;
  conflict.consent = {"x"};
  conflict.refuse = {"x"};
  CHECK(error_of([&] { conflict.to_signal_set(); }) == ErrorCode::kConflict);
}
