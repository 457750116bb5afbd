#pragma once

// Signal vocabulary shared by both sides of the exchange: request ids, the
// five general signals, the four specific directive kinds and the SignalSet
// that crosses the wire.

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace adpc {

enum class GeneralSignal { kRejectAll, kWithdrawAll, kObjectAll, kDoNotTrack, kDoNotSell };

inline constexpr std::array<GeneralSignal, 5> kAllGeneralSignals = {
    GeneralSignal::kRejectAll, GeneralSignal::kWithdrawAll, GeneralSignal::kObjectAll,
    GeneralSignal::kDoNotTrack, GeneralSignal::kDoNotSell};

std::string_view to_string(GeneralSignal g) noexcept;
std::optional<GeneralSignal> parse_general_signal(std::string_view token) noexcept;

enum class DirectiveKind { kConsent, kRefuse, kWithdraw, kObject };

inline constexpr std::array<DirectiveKind, 4> kAllDirectiveKinds = {
    DirectiveKind::kConsent, DirectiveKind::kRefuse, DirectiveKind::kWithdraw,
    DirectiveKind::kObject};

std::string_view to_string(DirectiveKind k) noexcept;
std::optional<DirectiveKind> parse_directive_kind(std::string_view token) noexcept;

// 1-63 chars of [A-Za-z0-9._-], case-sensitive.
class RequestId {
 public:
  static constexpr std::size_t kMaxLength = 63;

  // Throws Error(kSyntax) on an invalid token.
  explicit RequestId(std::string token);

  static bool is_valid(std::string_view token) noexcept;

  const std::string& str() const noexcept { return token_; }

  auto operator<=>(const RequestId&) const = default;

 private:
  std::string token_;
};

// Generals in canonical order, specifics keyed by kind. A RequestId never
// appears under two kinds; add() enforces that with Error(kConflict).
class SignalSet {
 public:
  using IdSet = std::set<RequestId>;

  void add(GeneralSignal g);
  void add(DirectiveKind kind, const RequestId& id);
  void add(DirectiveKind kind, std::string_view id) { add(kind, RequestId(std::string(id))); }

  bool has(GeneralSignal g) const { return generals_.contains(g); }
  const std::set<GeneralSignal>& generals() const noexcept { return generals_; }

  // Empty set when nothing is registered under the kind.
  const IdSet& ids(DirectiveKind kind) const;
  std::optional<DirectiveKind> kind_of(const RequestId& id) const;

  bool empty() const noexcept;

  bool operator==(const SignalSet&) const = default;

 private:
  std::set<GeneralSignal> generals_;
  std::map<DirectiveKind, IdSet> specifics_;
};

// What a controller announces in its ADPC response field.
struct MetaAnnouncement {
  bool linked_meta = false;
  std::optional<std::string> ack;  // 16 lowercase hex

  bool operator==(const MetaAnnouncement&) const = default;
};

}  // namespace adpc
