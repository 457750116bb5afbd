#pragma once

// User-side automation rules: white- and blacklists and a prompt threshold
// ("only ask once I visit this site regularly").

#include "adpc/core/resource.h"
#include "adpc/core/signal.h"
#include "adpc/store/clock.h"
#include "adpc/store/origin.h"
#include "adpc/store/origin_record.h"

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace adpc {

struct Whitelist {
  std::optional<std::set<RequestId>> ids;  // nullopt: all requests
  bool operator==(const Whitelist&) const = default;
};
struct Blacklist {
  bool operator==(const Blacklist&) const = default;
};
struct PromptThreshold {
  int visits = 1;
  int window_days = 1;
  bool operator==(const PromptThreshold&) const = default;
};

using PolicyAction = std::variant<Whitelist, Blacklist, PromptThreshold>;

struct PolicyRule {
  std::uint64_t id = 0;  // assigned by the store
  std::string pattern;   // exact host, or "*.suffix" matching strict subdomains
  PolicyAction action;

  bool operator==(const PolicyRule&) const = default;
};

bool is_valid_pattern(std::string_view pattern) noexcept;
bool pattern_matches(std::string_view pattern, std::string_view host) noexcept;
// Higher is more specific. Exact hosts outrank every wildcard.
std::size_t pattern_specificity(std::string_view pattern) noexcept;

// Throws Error(kSchema) on an invalid pattern, visits < 1 or window < 1.
void validate(const PolicyRule& rule);

nlohmann::ordered_json to_json(const PolicyRule& rule);
// Throws Error(kSchema).
PolicyRule policy_rule_from_json(const nlohmann::json& j);

struct AutoSignal {
  SignalSet signal;
  bool operator==(const AutoSignal&) const = default;
};
struct Prompt {
  std::vector<RequestId> pending;
  bool operator==(const Prompt&) const = default;
};
struct NoAction {
  bool below_threshold = false;  // a prompt-threshold rule matched but is not met yet
  bool operator==(const NoAction&) const = default;
};

using PolicyOutcome = std::variant<AutoSignal, Prompt, NoAction>;

// Ids whose stored status is still pending (consent) or not-objected
// (legitimate interest), in resource order.
std::vector<RequestId> undecided_ids(const ConsentRequestsList& requests, const DecisionMap& decisions);

// Pure. Explicit decisions are never overridden. The most specific matching
// blacklist/whitelist rule decides, blacklist winning ties:
//   blacklist -> AutoSignal(reject-all, object-all) when anything is undecided
//   whitelist -> AutoSignal(consent=<listed ids ∩ pending consent requests>)
// Otherwise the most specific prompt-threshold rule yields Prompt once the
// visits inside its window reach n. Everything else is NoAction.
PolicyOutcome apply_policy(const Origin& origin, const ConsentRequestsList& requests, const OriginRecord& record,
                           std::span<const PolicyRule> rules, Instant now);

// Counts at most one visit per UTC calendar day and prunes visits older than
// the largest prompt-threshold window (at least one day is kept).
void note_visit(OriginRecord& record, Instant now, std::span<const PolicyRule> rules);

}  // namespace adpc
