#include "adpc/core/decision.h"

#include "adpc/core/error.h"

namespace adpc {

std::string_view to_string(RequestStatus s) noexcept {
  switch (s) {
    case RequestStatus::kPending: return "pending";
    case RequestStatus::kConsented: return "consented";
    case RequestStatus::kRefused: return "refused";
    case RequestStatus::kWithdrawn: return "withdrawn";
    case RequestStatus::kObjected: return "objected";
    case RequestStatus::kNotObjected: return "not-objected";
  }
  return "";
}

std::optional<RequestStatus> parse_request_status(std::string_view token) noexcept {
  for (RequestStatus s : kAllRequestStatuses) {
    if (to_string(s) == token) return s;
  }
  return std::nullopt;
}

bool status_valid_for(RequestStatus s, Basis b) noexcept {
  const bool li_status = s == RequestStatus::kObjected || s == RequestStatus::kNotObjected;
  return (b == Basis::kLegitimateInterest) == li_status;
}

RequestStatus initial_status(Basis b) noexcept {
  return b == Basis::kConsent ? RequestStatus::kPending : RequestStatus::kNotObjected;
}

RequestStatus apply_transition(RequestStatus current, DirectiveKind kind, Basis basis) {
  const bool kind_is_li = kind == DirectiveKind::kObject;
  if (!status_valid_for(current, basis) || kind_is_li != (basis == Basis::kLegitimateInterest)) {
    throw Error(ErrorCode::kWrongBasis, std::string(to_string(kind)) + " cannot apply to a " +
                                            std::string(to_string(current)) + " " +
                                            std::string(to_string(basis)) + " purpose");
  }
  switch (kind) {
    case DirectiveKind::kConsent:
      return RequestStatus::kConsented;
    case DirectiveKind::kRefuse:
      if (current == RequestStatus::kConsented) {
        throw Error(ErrorCode::kBadTransition, "consent already given; withdraw it instead of refusing");
      }
      return RequestStatus::kRefused;
    case DirectiveKind::kWithdraw:
      return current == RequestStatus::kConsented ? RequestStatus::kWithdrawn : current;
    case DirectiveKind::kObject:
      return RequestStatus::kObjected;
  }
  return current;
}

std::optional<RequestStatus> DecisionMap::status(const RequestId& id) const {
  auto it = statuses.find(id);
  if (it == statuses.end()) return std::nullopt;
  return it->second;
}

nlohmann::ordered_json to_json(const DecisionMap& map) {
  nlohmann::ordered_json statuses = nlohmann::ordered_json::object();
  for (const auto& [id, s] : map.statuses) statuses[id.str()] = to_string(s);
  nlohmann::ordered_json j;
  j["statuses"] = std::move(statuses);
  j["doNotTrack"] = map.do_not_track;
  j["doNotSell"] = map.do_not_sell;
  return j;
}

DecisionMap decision_map_from_json(const nlohmann::json& j) {
  DecisionMap map;
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "decision map is not an object");
  if (auto it = j.find("statuses"); it != j.end()) {
    if (!it->is_object()) throw Error(ErrorCode::kSchema, "decision map statuses is not an object");
    for (const auto& [key, value] : it->items()) {
      auto s = value.is_string() ? parse_request_status(value.get<std::string>()) : std::nullopt;
      if (!s) throw Error(ErrorCode::kSchema, "bad status for '" + key + "'");
      map.statuses.emplace(RequestId(key), *s);
    }
  }
  map.do_not_track = j.value("doNotTrack", false);
  map.do_not_sell = j.value("doNotSell", false);
  return map;
}

namespace {

// General directive to apply to an id no specific directive names, if any.
std::optional<DirectiveKind> general_effect(const ConsentRequest& r, Basis basis, RequestStatus prior,
                                            const SignalSet& signal) {
  const bool tracked = signal.has(GeneralSignal::kDoNotTrack) && r.has_tag("tracking");
  const bool sold = signal.has(GeneralSignal::kDoNotSell) && r.has_tag("sale");

  if (basis == Basis::kLegitimateInterest) {
    if (signal.has(GeneralSignal::kObjectAll) || tracked || sold) return DirectiveKind::kObject;
    return std::nullopt;
  }
  if (prior == RequestStatus::kConsented) {
    if (signal.has(GeneralSignal::kWithdrawAll)) return DirectiveKind::kWithdraw;
    return std::nullopt;
  }
  // General refusals only reach undecided requests; an explicit earlier
  // decision is changed only by a specific directive.
  if (prior == RequestStatus::kPending &&
      (signal.has(GeneralSignal::kRejectAll) || tracked || sold)) {
    return DirectiveKind::kRefuse;
  }
  return std::nullopt;
}

}  // namespace

DecisionMap evaluate(const ConsentRequestsList& requests, const SignalSet& signal, const DecisionMap& prior) {
  for (DirectiveKind kind : kAllDirectiveKinds) {
    for (const auto& id : signal.ids(kind)) {
      if (!requests.contains(id)) {
        throw Error(ErrorCode::kUnknownId, "request id '" + id.str() + "' is not in resource version " +
                                               requests.version());
      }
    }
  }

  DecisionMap out;
  out.do_not_track = prior.do_not_track || signal.has(GeneralSignal::kDoNotTrack);
  out.do_not_sell = prior.do_not_sell || signal.has(GeneralSignal::kDoNotSell);

  auto run = [&](const std::vector<ConsentRequest>& list, Basis basis) {
    for (const auto& r : list) {
      RequestStatus before = prior.status(r.id).value_or(initial_status(basis));
      if (!status_valid_for(before, basis)) before = initial_status(basis);
      RequestStatus after = before;
      std::optional<DirectiveKind> kind = signal.kind_of(r.id);
      if (!kind) kind = general_effect(r, basis, before, signal);
      if (kind) {
        try {
          after = apply_transition(before, *kind, basis);
        } catch (const Error& e) {
          throw Error(e.code(), "request id '" + r.id.str() + "': " + e.detail());
        }
      }
      out.statuses.emplace(r.id, after);
    }
  };
  run(requests.consent_requests(), Basis::kConsent);
  run(requests.legitimate_interests(), Basis::kLegitimateInterest);
  return out;
}

std::optional<LegacyFlags> to_binary_signal(const SignalSet& s) {
  if (s.empty()) return std::nullopt;
  return LegacyFlags{s.has(GeneralSignal::kDoNotTrack), s.has(GeneralSignal::kDoNotSell)};
}

}  // namespace adpc
