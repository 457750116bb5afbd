#include "adpc/core/grammar.h"

#include "adpc/core/error.h"

#include <cctype>

namespace adpc {
namespace {

constexpr std::string_view kLinkedMeta = "linked-meta";
constexpr std::string_view kAck = "ack";

bool is_ows(char c) noexcept { return c == ' ' || c == '\t'; }

bool is_token_char(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
         c == '_' || c == '.';
}

bool is_hex(char c) noexcept {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

std::string describe(std::string_view raw, std::size_t pos) {
  return "at offset " + std::to_string(pos) + " of " + std::to_string(raw.size()) + "-byte field";
}

class FieldParser {
 public:
  FieldParser(std::string_view raw, Direction direction) : raw_(raw), direction_(direction) {}

  ParsedField run() {
    std::size_t end = raw_.size();
    while (pos_ < end && is_ows(raw_[pos_])) ++pos_;
    while (end > pos_ && is_ows(raw_[end - 1])) --end;
    raw_ = raw_.substr(0, end);
    if (pos_ == raw_.size()) {
      throw Error(ErrorCode::kEmpty, "ADPC field contains no directive");
    }

    for (;;) {
      directive();
      skip_ows();
      if (at_end()) break;
      if (raw_[pos_] != ',') syntax("expected ','");
      ++pos_;
      skip_ows();
      if (at_end()) syntax("dangling ','");
    }

    if (direction_ == Direction::kSubjectToController) return signals_;
    return meta_;
  }

 private:
  [[noreturn]] void syntax(const std::string& what) const {
    throw Error(ErrorCode::kSyntax, what + " " + describe(raw_, pos_));
  }

  bool at_end() const noexcept { return pos_ >= raw_.size(); }

  void skip_ows() {
    while (!at_end() && is_ows(raw_[pos_])) ++pos_;
  }

  std::string_view token() {
    std::size_t start = pos_;
    while (!at_end() && is_token_char(raw_[pos_])) ++pos_;
    return raw_.substr(start, pos_ - start);
  }

  RequestId id() {
    std::string_view tok = token();
    if (!RequestId::is_valid(tok)) syntax("invalid request id");
    return RequestId(std::string(tok));
  }

  void directive() {
    std::string_view name = token();
    if (name.empty()) syntax("expected directive");

    if (!at_end() && raw_[pos_] == '=') {
      ++pos_;
      if (name == kAck) {
        ack();
        return;
      }
      auto kind = parse_directive_kind(name);
      if (!kind) syntax("unknown directive '" + std::string(name) + "'");
      require_direction(Direction::kSubjectToController, name);
      id_set(*kind);
      return;
    }

    if (name == kLinkedMeta) {
      require_direction(Direction::kControllerToSubject, name);
      meta_.linked_meta = true;
      return;
    }
    auto general = parse_general_signal(name);
    if (!general) syntax("unknown directive '" + std::string(name) + "'");
    require_direction(Direction::kSubjectToController, name);
    signals_.add(*general);
  }

  void id_set(DirectiveKind kind) {
    if (at_end() || raw_[pos_] != '"') {
      signals_.add(kind, id());
      return;
    }
    ++pos_;
    for (;;) {
      signals_.add(kind, id());
      if (at_end()) syntax("unterminated quoted id set");
      if (raw_[pos_] == '"') {
        ++pos_;
        return;
      }
      if (raw_[pos_] != ' ') syntax("expected SP or DQUOTE in id set");
      ++pos_;
    }
  }

  void ack() {
    require_direction(Direction::kControllerToSubject, kAck);
    std::string_view digits = token();
    if (digits.size() != 16) syntax("ack digest must be 16 hex digits");
    std::string lowered;
    for (char c : digits) {
      if (!is_hex(c)) syntax("ack digest must be 16 hex digits");
      lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (meta_.ack && *meta_.ack != lowered) {
      throw Error(ErrorCode::kConflict, "two different ack digests in one field");
    }
    meta_.ack = std::move(lowered);
  }

  void require_direction(Direction wanted, std::string_view name) const {
    if (direction_ != wanted) {
      throw Error(ErrorCode::kDirection,
                  "directive '" + std::string(name) + "' not allowed in this direction " +
                      describe(raw_, pos_));
    }
  }

  std::string_view raw_;
  Direction direction_;
  std::size_t pos_ = 0;
  SignalSet signals_;
  MetaAnnouncement meta_;
};

}  // namespace

ParsedField parse_signal_field(std::string_view raw, Direction direction) {
  return FieldParser(raw, direction).run();
}

SignalSet parse_subject_field(std::string_view raw) {
  return std::get<SignalSet>(parse_signal_field(raw, Direction::kSubjectToController));
}

MetaAnnouncement parse_controller_field(std::string_view raw) {
  return std::get<MetaAnnouncement>(parse_signal_field(raw, Direction::kControllerToSubject));
}

std::string serialize_signal_set(const SignalSet& s) {
  if (s.empty()) {
    throw Error(ErrorCode::kEmpty, "refusing to serialize an empty signal set");
  }
  std::string out;
  auto sep = [&out] {
    if (!out.empty()) out += ", ";
  };
  for (GeneralSignal g : s.generals()) {
    sep();
    out += to_string(g);
  }
  for (DirectiveKind kind : kAllDirectiveKinds) {
    const auto& ids = s.ids(kind);
    if (ids.empty()) continue;
    sep();
    out += to_string(kind);
    out += '=';
    // std::set<RequestId> orders by std::string, i.e. bytewise.
    const bool quoted = ids.size() > 1;
    if (quoted) out += '"';
    bool first = true;
    for (const auto& id : ids) {
      if (!first) out += ' ';
      out += id.str();
      first = false;
    }
    if (quoted) out += '"';
  }
  return out;
}

std::string serialize_meta(const MetaAnnouncement& m) {
  std::string out;
  if (m.linked_meta) out += kLinkedMeta;
  if (m.ack) {
    if (!out.empty()) out += ", ";
    out += "ack=" + *m.ack;
  }
  return out;
}

}  // namespace adpc
