#pragma once

#include "adpc/core/resource.h"
#include "adpc/core/signal.h"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string_view>

namespace adpc {

// Consent-based requests live in {pending, consented, refused, withdrawn};
// legitimate-interest purposes in {not-objected, objected}.
enum class RequestStatus { kPending, kConsented, kRefused, kWithdrawn, kObjected, kNotObjected };

inline constexpr std::array<RequestStatus, 6> kAllRequestStatuses = {
    RequestStatus::kPending,   RequestStatus::kConsented, RequestStatus::kRefused,
    RequestStatus::kWithdrawn, RequestStatus::kObjected,  RequestStatus::kNotObjected};

std::string_view to_string(RequestStatus s) noexcept;
std::optional<RequestStatus> parse_request_status(std::string_view token) noexcept;

bool status_valid_for(RequestStatus s, Basis b) noexcept;
RequestStatus initial_status(Basis b) noexcept;

// Transition table:
//   consent   {pending, refused, withdrawn, consented} -> consented
//   refuse    {pending, withdrawn, refused}            -> refused
//   refuse    consented                                -> E_BAD_TRANSITION
//   withdraw  consented -> withdrawn, otherwise unchanged
//   object    {not-objected, objected}                 -> objected
// A kind or current status that does not belong to the basis is
// E_WRONG_BASIS. A withdraw that leaves the status unchanged is a no-op
// the caller may log.
RequestStatus apply_transition(RequestStatus current, DirectiveKind kind, Basis basis);

struct DecisionMap {
  std::map<RequestId, RequestStatus> statuses;
  bool do_not_track = false;
  bool do_not_sell = false;

  // Stored status, or nullopt when the id was never recorded.
  std::optional<RequestStatus> status(const RequestId& id) const;

  bool operator==(const DecisionMap&) const = default;
};

nlohmann::ordered_json to_json(const DecisionMap& map);
DecisionMap decision_map_from_json(const nlohmann::json& j);

// Computes the effective status of every id in `requests`:
//  - a specific directive naming the id wins;
//  - otherwise reject-all refuses pending consent requests, withdraw-all
//    withdraws consented ones, object-all objects to legitimate interests;
//  - do-not-track / do-not-sell set the flags and act like reject-all /
//    object-all on requests tagged `tracking` / `sale`;
//  - otherwise the prior status carries over (missing ids start pending or
//    not-objected).
// The result holds exactly the ids of `requests`. Throws Error(kUnknownId)
// for a specific id outside `requests`, and propagates transition errors.
DecisionMap evaluate(const ConsentRequestsList& requests, const SignalSet& signal,
                     const DecisionMap& prior);

// Projection onto DNT / GPC style booleans. Everything else is dropped.
struct LegacyFlags {
  bool dnt = false;
  bool do_not_sell = false;

  bool operator==(const LegacyFlags&) const = default;
};

// nullopt for an empty set.
std::optional<LegacyFlags> to_binary_signal(const SignalSet& s);

}  // namespace adpc
