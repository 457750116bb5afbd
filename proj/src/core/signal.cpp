#include "adpc/core/signal.h"

#include "adpc/core/error.h"

#include <algorithm>

namespace adpc {

std::string_view to_string(GeneralSignal g) noexcept {
  switch (g) {
    case GeneralSignal::kRejectAll: return "reject-all";
    case GeneralSignal::kWithdrawAll: return "withdraw-all";
    case GeneralSignal::kObjectAll: return "object-all";
    case GeneralSignal::kDoNotTrack: return "do-not-track";
    case GeneralSignal::kDoNotSell: return "do-not-sell";
  }
  return "";
}

std::optional<GeneralSignal> parse_general_signal(std::string_view token) noexcept {
  for (GeneralSignal g : kAllGeneralSignals) {
    if (to_string(g) == token) return g;
  }
  return std::nullopt;
}

std::string_view to_string(DirectiveKind k) noexcept {
  switch (k) {
    case DirectiveKind::kConsent: return "consent";
    case DirectiveKind::kRefuse: return "refuse";
    case DirectiveKind::kWithdraw: return "withdraw";
    case DirectiveKind::kObject: return "object";
  }
  return "";
}

std::optional<DirectiveKind> parse_directive_kind(std::string_view token) noexcept {
  for (DirectiveKind k : kAllDirectiveKinds) {
    if (to_string(k) == token) return k;
  }
  return std::nullopt;
}

namespace {

bool is_id_char(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
         c == '_' || c == '.';
}

}  // namespace

bool RequestId::is_valid(std::string_view token) noexcept {
  return !token.empty() && token.size() <= kMaxLength && std::all_of(token.begin(), token.end(), is_id_char);
}

RequestId::RequestId(std::string token) : token_(std::move(token)) {
  if (!is_valid(token_)) {
    throw Error(ErrorCode::kSyntax, "invalid request id '" + token_ + "'");
  }
}

void SignalSet::add(GeneralSignal g) { generals_.insert(g); }

void SignalSet::add(DirectiveKind kind, const RequestId& id) {
  if (auto existing = kind_of(id); existing && *existing != kind) {
    throw Error(ErrorCode::kConflict, "request id '" + id.str() + "' appears under both " +
                                          std::string(to_string(*existing)) + " and " +
                                          std::string(to_string(kind)));
  }
  specifics_[kind].insert(id);
}

const SignalSet::IdSet& SignalSet::ids(DirectiveKind kind) const {
  static const IdSet kEmpty;
  auto it = specifics_.find(kind);
  return it == specifics_.end() ? kEmpty : it->second;
}

std::optional<DirectiveKind> SignalSet::kind_of(const RequestId& id) const {
  for (const auto& [kind, ids] : specifics_) {
    if (ids.contains(id)) return kind;
  }
  return std::nullopt;
}

bool SignalSet::empty() const noexcept {
  return generals_.empty() &&
         std::all_of(specifics_.begin(), specifics_.end(), [](const auto& kv) { return kv.second.empty(); });
}

}  // namespace adpc
