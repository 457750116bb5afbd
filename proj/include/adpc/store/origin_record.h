#pragma once

#include "adpc/core/decision.h"
#include "adpc/core/resource.h"
#include "adpc/store/clock.h"
#include "adpc/store/origin.h"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace adpc {

enum class SupportState { kUnknown, kSupported, kUnsupported };

std::string_view to_string(SupportState s) noexcept;

struct SupportStatus {
  SupportState state = SupportState::kUnknown;
  std::optional<std::string> requests_url;  // present iff supported
  std::optional<Instant> expiry;

  bool valid_at(Instant now) const { return expiry && *expiry > now; }
  bool supported_at(Instant now) const { return state == SupportState::kSupported && valid_at(now); }

  bool operator==(const SupportStatus&) const = default;
};

// Requests at one origin still waiting for a human decision.
struct PendingPrompt {
  Origin origin;
  std::string version;
  std::vector<ConsentRequest> items;

  bool operator==(const PendingPrompt&) const = default;
};

nlohmann::ordered_json to_json(const PendingPrompt& p);

struct OriginRecord {
  Origin origin;
  DecisionMap decisions;
  std::optional<std::string> last_resource_version;
  std::vector<Instant> visits;  // ascending, at most one per UTC day
  SupportStatus support;

  // Agent bookkeeping.
  std::optional<ConsentRequestsList> requests;
  std::optional<std::string> etag;
  std::optional<PendingPrompt> prompt;
  bool prompt_deferred = false;        // a prompt-threshold rule held the prompt back
  std::vector<std::string> queued;     // canonical deltas not yet carried by a sent field
  std::optional<std::string> awaiting_ack;  // digest of the last sent field

  bool operator==(const OriginRecord&) const = default;
};

nlohmann::ordered_json to_json(const OriginRecord& r);
// Throws Error(kSchema).
OriginRecord origin_record_from_json(const nlohmann::json& j);

}  // namespace adpc
