#include "adpc/core/decision.h"
#include "adpc/core/digest.h"
#include "adpc/core/error.h"
#include "adpc/core/grammar.h"

#include "support/generators.h"
#include "support/sha256_oracle.h"
#include "support/transition_oracle.h"

#include <catch2/catch_amalgamated.hpp>

using namespace adpc;
using adpc::testing::make_list;
using adpc::testing::make_request;

namespace {

template <typename F>
ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an adpc::Error");
  return ErrorCode::kIo;
}

RequestStatus status(const DecisionMap& m, const char* id) { return m.statuses.at(RequestId(id)); }

}  // namespace

// ── apply_transition ────────────────────────────────────────────────────────

TEST_CASE("transition: exhaustive table matches oracle", "[transition]") {
  const auto table = adpc::testing::transition_oracle();
  REQUIRE(table.size() == kAllRequestStatuses.size() * kAllDirectiveKinds.size() * 2);
  for (const auto& row : table) {
    INFO(to_string(row.current) << " x " << to_string(row.kind) << " x " << to_string(row.basis));
    if (std::holds_alternative<RequestStatus>(row.expected)) {
      CHECK(apply_transition(row.current, row.kind, row.basis) == std::get<RequestStatus>(row.expected));
    } else {
      CHECK(error_of([&] { apply_transition(row.current, row.kind, row.basis); }) ==
            std::get<ErrorCode>(row.expected));
    }
  }
}

TEST_CASE("transition: named examples", "[transition]") {
  CHECK(apply_transition(RequestStatus::kConsented, DirectiveKind::kWithdraw, Basis::kConsent) ==
        RequestStatus::kWithdrawn);
  CHECK(apply_transition(RequestStatus::kPending, DirectiveKind::kConsent, Basis::kConsent) ==
        RequestStatus::kConsented);
  CHECK(error_of([] { apply_transition(RequestStatus::kConsented, DirectiveKind::kRefuse, Basis::kConsent); }) ==
        ErrorCode::kBadTransition);
  CHECK(apply_transition(RequestStatus::kNotObjected, DirectiveKind::kObject, Basis::kLegitimateInterest) ==
        RequestStatus::kObjected);
}

// ── evaluate ────────────────────────────────────────────────────────────────

TEST_CASE("evaluate: reject all but consent to x and y", "[evaluate]") {
  auto requests = make_list("v1", {"x", "y", "z"});
  auto out = evaluate(requests, parse_subject_field(R"(reject-all, consent="x y")"), {});
  CHECK(status(out, "x") == RequestStatus::kConsented);
  CHECK(status(out, "y") == RequestStatus::kConsented);
  CHECK(status(out, "z") == RequestStatus::kRefused);
  CHECK(out.statuses.size() == 3);
}

TEST_CASE("evaluate: withdraw-all only exits consented", "[evaluate]") {
  auto requests = make_list("v1", {"x", "sibling"});
  DecisionMap prior;
  prior.statuses.emplace(RequestId("x"), RequestStatus::kConsented);
  prior.statuses.emplace(RequestId("sibling"), RequestStatus::kPending);
  auto out = evaluate(requests, parse_subject_field("withdraw-all"), prior);
  CHECK(status(out, "x") == RequestStatus::kWithdrawn);
  CHECK(status(out, "sibling") == RequestStatus::kPending);
}

TEST_CASE("evaluate: object-all reaches legitimate interests only", "[evaluate]") {
  auto requests = make_list("v1", {"x"}, {"dm"});
  DecisionMap prior;
  prior.statuses.emplace(RequestId("dm"), RequestStatus::kNotObjected);
  prior.statuses.emplace(RequestId("x"), RequestStatus::kPending);
  auto out = evaluate(requests, parse_subject_field("object-all"), prior);
  CHECK(status(out, "dm") == RequestStatus::kObjected);
  CHECK(status(out, "x") == RequestStatus::kPending);
}

TEST_CASE("evaluate: unknown specific id", "[evaluate]") {
  auto requests = make_list("v1", {"x"});
  CHECK(error_of([&] { evaluate(requests, parse_subject_field("consent=unknown"), {}); }) == ErrorCode::kUnknownId);
}

TEST_CASE("evaluate: transition errors propagate", "[evaluate]") {
  auto requests = make_list("v1", {"x"}, {"dm"});
  CHECK(error_of([&] { evaluate(requests, parse_subject_field("object=x"), {}); }) == ErrorCode::kWrongBasis);
  CHECK(error_of([&] { evaluate(requests, parse_subject_field("consent=dm"), {}); }) == ErrorCode::kWrongBasis);
  DecisionMap prior;
  prior.statuses.emplace(RequestId("x"), RequestStatus::kConsented);
  CHECK(error_of([&] { evaluate(requests, parse_subject_field("refuse=x"), prior); }) ==
        ErrorCode::kBadTransition);
}

TEST_CASE("evaluate: reject-all leaves explicit decisions alone", "[evaluate]") {
  auto requests = make_list("v1", {"a", "b", "c"});
  DecisionMap prior;
  prior.statuses.emplace(RequestId("a"), RequestStatus::kConsented);
  prior.statuses.emplace(RequestId("b"), RequestStatus::kWithdrawn);
  auto out = evaluate(requests, parse_subject_field("reject-all"), prior);
  CHECK(status(out, "a") == RequestStatus::kConsented);
  CHECK(status(out, "b") == RequestStatus::kWithdrawn);
  CHECK(status(out, "c") == RequestStatus::kRefused);
}

TEST_CASE("evaluate: do-not-track and do-not-sell map through tags", "[evaluate]") {
  ConsentRequestsList requests("v1",
                               {make_request("analytics", {"tracking"}), make_request("ads", {"sale"}),
                                make_request("plain")},
                               {make_request("profiling", {"tracking"}), make_request("resale", {"sale"})});
  auto dnt = evaluate(requests, parse_subject_field("do-not-track"), {});
  CHECK(dnt.do_not_track);
  CHECK_FALSE(dnt.do_not_sell);
  CHECK(status(dnt, "analytics") == RequestStatus::kRefused);
  CHECK(status(dnt, "ads") == RequestStatus::kPending);
  CHECK(status(dnt, "plain") == RequestStatus::kPending);
  CHECK(status(dnt, "profiling") == RequestStatus::kObjected);
  CHECK(status(dnt, "resale") == RequestStatus::kNotObjected);

  auto dns = evaluate(requests, parse_subject_field("do-not-sell"), {});
  CHECK(dns.do_not_sell);
  CHECK(status(dns, "ads") == RequestStatus::kRefused);
  CHECK(status(dns, "resale") == RequestStatus::kObjected);
  CHECK(status(dns, "analytics") == RequestStatus::kPending);

  // A specific consent still wins over the tag mapping.
  auto both = evaluate(requests, parse_subject_field("do-not-track, consent=analytics"), {});
  CHECK(status(both, "analytics") == RequestStatus::kConsented);
}

TEST_CASE("evaluate: result covers exactly the resource ids", "[evaluate]") {
  auto requests = make_list("v2", {"x"});
  DecisionMap prior;
  prior.statuses.emplace(RequestId("gone"), RequestStatus::kConsented);
  auto out = evaluate(requests, parse_subject_field("do-not-sell"), prior);
  CHECK(out.statuses.size() == 1);
  CHECK(status(out, "x") == RequestStatus::kPending);
}

TEST_CASE("property: specific directives override any generals", "[evaluate][property]") {
  auto requests = make_list("v1", {"a", "b", "c", "d"}, {"l1", "l2"});
  std::mt19937_64 rng(0xADFC0010);
  std::uniform_int_distribution<int> pick_status(0, 3);
  const std::array<RequestStatus, 4> consent_states = {RequestStatus::kPending, RequestStatus::kConsented,
                                                        RequestStatus::kRefused, RequestStatus::kWithdrawn};
  for (int iter = 0; iter < 300; ++iter) {
    DecisionMap prior;
    for (const char* id : {"a", "b", "c", "d"}) {
      prior.statuses.emplace(RequestId(id), consent_states[static_cast<std::size_t>(pick_status(rng))]);
    }
    prior.statuses.emplace(RequestId("l1"), RequestStatus::kNotObjected);
    prior.statuses.emplace(RequestId("l2"), RequestStatus::kNotObjected);

    SignalSet specifics;
    specifics.add(DirectiveKind::kConsent, "a");
    specifics.add(DirectiveKind::kWithdraw, "b");
    specifics.add(DirectiveKind::kObject, "l1");
    if (prior.statuses.at(RequestId("c")) != RequestStatus::kConsented) specifics.add(DirectiveKind::kRefuse, "c");

    auto baseline = evaluate(requests, specifics, prior);
    for (unsigned mask = 1; mask < 32; ++mask) {
      SignalSet with = specifics;
      for (std::size_t g = 0; g < kAllGeneralSignals.size(); ++g) {
        if (mask & (1u << g)) with.add(kAllGeneralSignals[g]);
      }
      auto out = evaluate(requests, with, prior);
      for (DirectiveKind k : kAllDirectiveKinds) {
        for (const auto& id : specifics.ids(k)) {
          REQUIRE(out.statuses.at(id) == baseline.statuses.at(id));
        }
      }
    }
  }
}

TEST_CASE("property: objection is monotone", "[evaluate][property]") {
  auto requests = make_list("v1", {"a", "b"}, {"l1", "l2"});
  std::mt19937_64 rng(0xADFC0011);
  DecisionMap state;
  state.statuses.emplace(RequestId("l1"), RequestStatus::kObjected);
  for (int iter = 0; iter < 2000; ++iter) {
    SignalSet s;
    std::bernoulli_distribution coin(0.4);
    for (GeneralSignal g : kAllGeneralSignals) {
      if (coin(rng)) s.add(g);
    }
    for (const char* id : {"a", "b"}) {
      if (!coin(rng)) continue;
      auto k = kAllDirectiveKinds[static_cast<std::size_t>(rng() % 3)];
      if (k == DirectiveKind::kRefuse && state.status(RequestId(id)) == RequestStatus::kConsented) continue;
      s.add(k, id);
    }
    if (coin(rng)) s.add(DirectiveKind::kObject, "l2");
    if (s.empty()) s.add(GeneralSignal::kDoNotTrack);
    const DecisionMap before = state;
    state = evaluate(requests, s, state);
    for (const auto& [id, st] : before.statuses) {
      if (st == RequestStatus::kObjected) REQUIRE(state.statuses.at(id) == RequestStatus::kObjected);
    }
  }
}

TEST_CASE("property: flag-only signals leave statuses untouched", "[evaluate][property]") {
  auto requests = make_list("v1", {"a", "b"}, {"l1"});
  const std::array<RequestStatus, 4> consent_states = {RequestStatus::kPending, RequestStatus::kConsented,
                                                        RequestStatus::kRefused, RequestStatus::kWithdrawn};
  for (RequestStatus sa : consent_states) {
    for (RequestStatus sb : consent_states) {
      for (RequestStatus sl : {RequestStatus::kNotObjected, RequestStatus::kObjected}) {
        DecisionMap prior;
        prior.statuses.emplace(RequestId("a"), sa);
        prior.statuses.emplace(RequestId("b"), sb);
        prior.statuses.emplace(RequestId("l1"), sl);
        for (const char* field : {"do-not-track", "do-not-sell", "do-not-track, do-not-sell"}) {
          auto out = evaluate(requests, parse_subject_field(field), prior);
          CHECK(out.statuses == prior.statuses);
        }
      }
    }
  }
}

// ── canonical_digest / to_binary_signal ─────────────────────────────────────

TEST_CASE("digest: pinned vectors from an external sha256 tool", "[digest]") {
  CHECK(sha256_hex("") == adpc::testing::kShaEmpty);
  CHECK(sha256_hex("abc") == adpc::testing::kShaAbc);
  CHECK(canonical_digest(parse_subject_field("reject-all")) == adpc::testing::kDigestRejectAll);
  CHECK(canonical_digest(parse_subject_field("consent=analytics")) == adpc::testing::kDigestConsentAnalytics);
  CHECK(canonical_digest(parse_subject_field(R"(consent="y x", reject-all)")) ==
        adpc::testing::kDigestCombination);
}

TEST_CASE("digest: oracle agrees with the pinned vectors", "[digest]") {
  CHECK(adpc::testing::oracle_sha256_hex("") == adpc::testing::kShaEmpty);
  CHECK(adpc::testing::oracle_sha256_hex("abc") == adpc::testing::kShaAbc);
  CHECK(adpc::testing::oracle_sha256_hex("reject-all").substr(0, 16) == adpc::testing::kDigestRejectAll);
  CHECK(adpc::testing::oracle_sha256_hex("consent=analytics").substr(0, 16) ==
        adpc::testing::kDigestConsentAnalytics);
}

TEST_CASE("digest: construction order does not matter", "[digest]") {
  SignalSet a, b;
  a.add(DirectiveKind::kConsent, "x");
  a.add(DirectiveKind::kConsent, "y");
  b.add(DirectiveKind::kConsent, "y");
  b.add(DirectiveKind::kConsent, "x");
  CHECK(canonical_digest(a) == canonical_digest(b));
  CHECK(is_digest(canonical_digest(a)));
  CHECK(error_of([] { canonical_digest(SignalSet{}); }) == ErrorCode::kEmpty);
}

TEST_CASE("legacy projection", "[legacy]") {
  CHECK(to_binary_signal(parse_subject_field("do-not-track")) == LegacyFlags{true, false});
  CHECK(to_binary_signal(parse_subject_field("consent=x")) == LegacyFlags{false, false});
  CHECK(to_binary_signal(parse_subject_field("do-not-sell, reject-all")) == LegacyFlags{false, true});
  CHECK_FALSE(to_binary_signal(SignalSet{}).has_value());
}

TEST_CASE("decision map json round trip", "[decision]") {
  DecisionMap m;
  m.statuses.emplace(RequestId("x"), RequestStatus::kConsented);
  m.statuses.emplace(RequestId("dm"), RequestStatus::kObjected);
  m.do_not_sell = true;
  CHECK(decision_map_from_json(nlohmann::json::parse(to_json(m).dump())) == m);
}
