#include "adpc/core/error.h"
#include "adpc/core/grammar.h"

#include "support/generators.h"

#include <catch2/catch_amalgamated.hpp>

using namespace adpc;
using adpc::testing::random_bytes;
using adpc::testing::random_field_like;
using adpc::testing::random_signal_set;

namespace {

ErrorCode parse_error(std::string_view raw, Direction d = Direction::kSubjectToController) {
  try {
    parse_signal_field(raw, d);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected parse failure for: " << raw);
  return ErrorCode::kIo;
}

std::set<std::string> ids_of(const SignalSet& s, DirectiveKind k) {
  std::set<std::string> out;
  for (const auto& id : s.ids(k)) out.insert(id.str());
  return out;
}

}  // namespace

TEST_CASE("parse: general plus quoted consent set", "[grammar]") {
  SignalSet s = parse_subject_field(R"(reject-all, consent="x y")");
  CHECK(s.generals() == std::set<GeneralSignal>{GeneralSignal::kRejectAll});
  CHECK(ids_of(s, DirectiveKind::kConsent) == std::set<std::string>{"x", "y"});
  CHECK(s.ids(DirectiveKind::kRefuse).empty());
}

TEST_CASE("parse: duplicate directives are deduplicated", "[grammar]") {
  SignalSet s = parse_subject_field("consent=analytics, consent=analytics");
  CHECK(ids_of(s, DirectiveKind::kConsent) == std::set<std::string>{"analytics"});
  CHECK(serialize_signal_set(s) == "consent=analytics");
}

TEST_CASE("parse: same id under two kinds is a conflict", "[grammar]") {
  CHECK(parse_error("consent=x, refuse=x") == ErrorCode::kConflict);
  CHECK(parse_error(R"(consent="x y", object="z y")") == ErrorCode::kConflict);
}

TEST_CASE("parse: do-not-track alone", "[grammar]") {
  SignalSet s = parse_subject_field("do-not-track");
  CHECK(s.generals() == std::set<GeneralSignal>{GeneralSignal::kDoNotTrack});
}

TEST_CASE("parse: whitespace handling follows OWS rules", "[grammar]") {
  CHECK(parse_subject_field("  reject-all ,\tconsent=x  ") == parse_subject_field("reject-all, consent=x"));
  CHECK(parse_subject_field("reject-all,consent=x") == parse_subject_field("reject-all, consent=x"));
  // Inside a quoted set exactly one SP separates ids.
  CHECK(parse_error(R"(consent="x  y")") == ErrorCode::kSyntax);
  CHECK(parse_error(R"(consent=" x")") == ErrorCode::kSyntax);
  CHECK(parse_error("consent = x") == ErrorCode::kSyntax);
}

TEST_CASE("parse: syntax errors", "[grammar]") {
  CHECK(parse_error("reject-all,") == ErrorCode::kSyntax);
  CHECK(parse_error(",reject-all") == ErrorCode::kSyntax);
  CHECK(parse_error("reject-all,,consent=x") == ErrorCode::kSyntax);
  CHECK(parse_error("Reject-All") == ErrorCode::kSyntax);
  CHECK(parse_error("consent=") == ErrorCode::kSyntax);
  CHECK(parse_error(R"(consent="")") == ErrorCode::kSyntax);
  CHECK(parse_error(R"(consent="x)") == ErrorCode::kSyntax);
  CHECK(parse_error("consent=x y") == ErrorCode::kSyntax);
  CHECK(parse_error("consent=caf\xc3\xa9") == ErrorCode::kSyntax);
  CHECK(parse_error("accept=x") == ErrorCode::kSyntax);
  CHECK(parse_error("consent=" + std::string(64, 'a')) == ErrorCode::kSyntax);
  CHECK_NOTHROW(parse_subject_field("consent=" + std::string(63, 'a')));
}

TEST_CASE("parse: empty field", "[grammar]") {
  CHECK(parse_error("") == ErrorCode::kEmpty);
  CHECK(parse_error(" \t ") == ErrorCode::kEmpty);
  CHECK(parse_error("", Direction::kControllerToSubject) == ErrorCode::kEmpty);
}

TEST_CASE("parse: direction is enforced", "[grammar]") {
  CHECK(parse_error("linked-meta") == ErrorCode::kDirection);
  CHECK(parse_error("ack=0123456789abcdef") == ErrorCode::kDirection);
  CHECK(parse_error("reject-all", Direction::kControllerToSubject) == ErrorCode::kDirection);
  CHECK(parse_error("consent=x", Direction::kControllerToSubject) == ErrorCode::kDirection);
}

TEST_CASE("parse: controller meta announcement", "[grammar]") {
  MetaAnnouncement m = parse_controller_field("linked-meta");
  CHECK(m.linked_meta);
  CHECK_FALSE(m.ack);

  m = parse_controller_field("linked-meta, ack=0123456789ABCDEF");
  CHECK(m.linked_meta);
  REQUIRE(m.ack);
  CHECK(*m.ack == "0123456789abcdef");
  CHECK(serialize_meta(m) == "linked-meta, ack=0123456789abcdef");

  CHECK(parse_error("ack=0123", Direction::kControllerToSubject) == ErrorCode::kSyntax);
  CHECK(parse_error("ack=0123456789abcdeg", Direction::kControllerToSubject) == ErrorCode::kSyntax);
  CHECK(parse_error("ack=0123456789abcdef, ack=fedcba9876543210", Direction::kControllerToSubject) ==
        ErrorCode::kConflict);
}

TEST_CASE("serialize: canonical ordering and quoting", "[grammar]") {
  SignalSet s;
  s.add(DirectiveKind::kConsent, "y");
  s.add(GeneralSignal::kRejectAll);
  s.add(DirectiveKind::kConsent, "x");
  CHECK(serialize_signal_set(s) == R"(reject-all, consent="x y")");

  SignalSet single;
  single.add(DirectiveKind::kConsent, "analytics");
  CHECK(serialize_signal_set(single) == "consent=analytics");

  SignalSet all;
  all.add(DirectiveKind::kObject, "o");
  all.add(DirectiveKind::kWithdraw, "w");
  all.add(DirectiveKind::kRefuse, "r");
  all.add(DirectiveKind::kConsent, "c");
  all.add(GeneralSignal::kDoNotSell);
  all.add(GeneralSignal::kDoNotTrack);
  all.add(GeneralSignal::kObjectAll);
  all.add(GeneralSignal::kWithdrawAll);
  all.add(GeneralSignal::kRejectAll);
  CHECK(serialize_signal_set(all) ==
        "reject-all, withdraw-all, object-all, do-not-track, do-not-sell, consent=c, refuse=r, withdraw=w, object=o");

  // Bytewise: uppercase sorts before lowercase, digits before letters.
  SignalSet bytewise;
  for (const char* id : {"b", "B", "a", "1", "_", "-", "."}) bytewise.add(DirectiveKind::kRefuse, id);
  CHECK(serialize_signal_set(bytewise) == R"(refuse="- . 1 B _ a b")");
}

TEST_CASE("serialize: empty set is refused", "[grammar]") {
  try {
    serialize_signal_set(SignalSet{});
    FAIL("expected E_EMPTY");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmpty);
  }
}

TEST_CASE("property: parse(serialize(s)) == s", "[grammar][property]") {
  std::mt19937_64 rng(0xADFC0001);
  for (int i = 0; i < 2000; ++i) {
    SignalSet s = random_signal_set(rng);
    std::string wire = serialize_signal_set(s);
    INFO(wire);
    REQUIRE(parse_subject_field(wire) == s);
  }
}

TEST_CASE("property: canonical form is injective", "[grammar][property]") {
  std::mt19937_64 rng(0xADFC0002);
  std::map<std::string, SignalSet> seen;
  for (int i = 0; i < 2000; ++i) {
    SignalSet s = random_signal_set(rng);
    auto [it, inserted] = seen.emplace(serialize_signal_set(s), s);
    if (!inserted) REQUIRE(it->second == s);
  }
}

TEST_CASE("property: parser is total on arbitrary input", "[grammar][property]") {
  std::mt19937_64 rng(0xADFC0003);
  auto probe = [](const std::string& input) {
    for (Direction d : {Direction::kSubjectToController, Direction::kControllerToSubject}) {
      try {
        parse_signal_field(input, d);
      } catch (const Error& e) {
        const auto c = e.code();
        REQUIRE((c == ErrorCode::kSyntax || c == ErrorCode::kConflict || c == ErrorCode::kDirection ||
                 c == ErrorCode::kEmpty));
      }
    }
  };
  for (int i = 0; i < 300; ++i) probe(random_bytes(rng, 4096));
  for (int i = 0; i < 3000; ++i) probe(random_field_like(rng));
  probe(random_bytes(rng, 64 * 1024));
}
