#include "adpc/agent/agent.h"
#include "adpc/core/grammar.h"
#include "adpc/http/network_client.h"
#include "adpc/http/server.h"
#include "adpc/server/controller.h"

#include "support/generators.h"
#include "support/sha256_oracle.h"

#include <catch2/catch_amalgamated.hpp>

using namespace adpc;

// The simulated transport stands in for sockets everywhere else; this runs
// the same exchange over real loopback connections.
TEST_CASE("agent and controller over loopback sockets", "[server][socket]") {
  SystemClock clock;
  std::optional<server::Controller> controller;
  http::Server listener([&](const http::Request& r) { return controller->handle(r); });
  const int port = listener.bind("127.0.0.1", 0);
  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  controller.emplace(
      server::ControllerConfig{.self = Origin::parse(base),
                               .requests = ConsentRequestsList("v1", {adpc::testing::make_request("analytics"),
                                                                      adpc::testing::make_request("x")})},
      clock);
  listener.start();

  http::NetworkClient client(std::chrono::seconds{5});

  SECTION("raw exchange") {
    http::Request req;
    req.url = base + "/";
    http::set_header(req.headers, "ADPC", "consent=analytics");
    const http::Response resp = client.send(req);
    CHECK(resp.status == 200);
    const MetaAnnouncement meta = parse_controller_field(*http::header_value(resp.headers, "ADPC"));
    CHECK(meta.linked_meta);
    CHECK(meta.ack == std::string(adpc::testing::kDigestConsentAnalytics));
    CHECK(resp.body.find(server::kAnalyticsMarker) != std::string::npos);
  }

  SECTION("agent visit") {
    DecisionStore store = DecisionStore::in_memory(clock);
    agent::Agent agent(store, client);
    const Origin origin = Origin::parse(base);
    agent.visit(base + "/");
    REQUIRE(store.find(origin)->support.state == SupportState::kSupported);
    CHECK(store.find(origin)->support.requests_url == base + "/.well-known/adpc.json");
    agent::DecisionInput in;
    in.consent = {"analytics"};
    in.refuse = {"x"};
    agent.decide(origin, in);
    const http::Response page = agent.visit(base + "/");
    CHECK(page.body.find(server::kAnalyticsMarker) != std::string::npos);
    CHECK(store.log().events().back().direction == EventDirection::kReceived);
    CHECK(store.verify_chain().ok);
    CHECK(controller->audit_events().back().payload.ends_with(" consent=analytics, refuse=x"));
  }

  listener.stop();
}

TEST_CASE("network client reports connection failures", "[server][socket]") {
  http::NetworkClient client(std::chrono::seconds{1});
  http::Request req;
  req.url = "http://127.0.0.1:1/";
  CHECK_THROWS_AS(client.send(req), Error);
  req.url = "not a url";
  try {
    client.send(req);
    FAIL("expected E_FETCH");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFetch);
  }
}
