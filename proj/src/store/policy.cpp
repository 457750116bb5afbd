#include "adpc/store/policy.h"

#include "adpc/core/error.h"

#include <algorithm>
#include <limits>

namespace adpc {

bool is_valid_pattern(std::string_view pattern) noexcept {
  if (pattern.starts_with("*.")) return is_valid_host(pattern.substr(2));
  return is_valid_host(pattern);
}

bool pattern_matches(std::string_view pattern, std::string_view host) noexcept {
  if (pattern.starts_with("*.")) {
    const std::string_view suffix = pattern.substr(1);  // ".example.com"
    return host.size() > suffix.size() && host.ends_with(suffix);
  }
  return pattern == host;
}

std::size_t pattern_specificity(std::string_view pattern) noexcept {
  if (pattern.starts_with("*.")) return pattern.size() - 2;
  return std::numeric_limits<std::size_t>::max() / 2 + pattern.size();
}

void validate(const PolicyRule& rule) {
  if (!is_valid_pattern(rule.pattern)) {
    throw Error(ErrorCode::kSchema, "invalid policy pattern '" + rule.pattern + "'");
  }
  if (const auto* t = std::get_if<PromptThreshold>(&rule.action)) {
    if (t->visits < 1 || t->window_days < 1) {
      throw Error(ErrorCode::kSchema, "prompt-threshold needs visits >= 1 and window >= 1 day");
    }
  }
}

nlohmann::ordered_json to_json(const PolicyRule& rule) {
  nlohmann::ordered_json j;
  j["id"] = rule.id;
  j["pattern"] = rule.pattern;
  std::visit(
      [&j](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Whitelist>) {
          j["action"] = "whitelist";
          if (a.ids) {
            j["ids"] = nlohmann::ordered_json::array();
            for (const auto& id : *a.ids) j["ids"].push_back(id.str());
          } else {
            j["ids"] = "all";
          }
        } else if constexpr (std::is_same_v<T, Blacklist>) {
          j["action"] = "blacklist";
        } else {
          j["action"] = "prompt-threshold";
          j["visits"] = a.visits;
          j["windowDays"] = a.window_days;
        }
      },
      rule.action);
  return j;
}

PolicyRule policy_rule_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "policy rule is not an object");
  PolicyRule rule;
  try {
    rule.id = j.value("id", std::uint64_t{0});
    rule.pattern = j.at("pattern").get<std::string>();
    const std::string action = j.at("action").get<std::string>();
    if (action == "whitelist") {
      Whitelist w;
      auto ids = j.find("ids");
      if (ids != j.end() && ids->is_array()) {
        w.ids.emplace();
        for (const auto& id : *ids) w.ids->insert(RequestId(id.get<std::string>()));
      } else if (ids != j.end() && !(ids->is_string() && ids->get<std::string>() == "all") && !ids->is_null()) {
        throw Error(ErrorCode::kSchema, "whitelist ids must be an array or \"all\"");
      }
      rule.action = std::move(w);
    } else if (action == "blacklist") {
      rule.action = Blacklist{};
    } else if (action == "prompt-threshold") {
      rule.action = PromptThreshold{j.at("visits").get<int>(), j.at("windowDays").get<int>()};
    } else {
      throw Error(ErrorCode::kSchema, "unknown policy action '" + action + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("malformed policy rule: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchema, e.detail());
  }
  validate(rule);
  return rule;
}

std::vector<RequestId> undecided_ids(const ConsentRequestsList& requests, const DecisionMap& decisions) {
  std::vector<RequestId> out;
  for (const auto& r : requests.consent_requests()) {
    if (decisions.status(r.id).value_or(RequestStatus::kPending) == RequestStatus::kPending) out.push_back(r.id);
  }
  for (const auto& r : requests.legitimate_interests()) {
    if (decisions.status(r.id).value_or(RequestStatus::kNotObjected) == RequestStatus::kNotObjected) {
      out.push_back(r.id);
    }
  }
  return out;
}

namespace {

template <typename Action>
const PolicyRule* best_match(std::span<const PolicyRule> rules, const std::string& host) {
  const PolicyRule* best = nullptr;
  for (const auto& rule : rules) {
    if (!std::holds_alternative<Action>(rule.action) || !pattern_matches(rule.pattern, host)) continue;
    if (!best || pattern_specificity(rule.pattern) > pattern_specificity(best->pattern)) best = &rule;
  }
  return best;
}

}  // namespace

PolicyOutcome apply_policy(const Origin& origin, const ConsentRequestsList& requests, const OriginRecord& record,
                           std::span<const PolicyRule> rules, Instant now) {
  const std::vector<RequestId> undecided = undecided_ids(requests, record.decisions);
  if (undecided.empty()) return NoAction{};

  const PolicyRule* black = best_match<Blacklist>(rules, origin.host);
  const PolicyRule* white = best_match<Whitelist>(rules, origin.host);

  if (black && (!white || pattern_specificity(black->pattern) >= pattern_specificity(white->pattern))) {
    SignalSet s;
    s.add(GeneralSignal::kRejectAll);
    s.add(GeneralSignal::kObjectAll);
    return AutoSignal{std::move(s)};
  }

  if (white) {
    const auto& listed = std::get<Whitelist>(white->action).ids;
    SignalSet s;
    for (const auto& r : requests.consent_requests()) {
      const bool pending =
          record.decisions.status(r.id).value_or(RequestStatus::kPending) == RequestStatus::kPending;
      if (pending && (!listed || listed->contains(r.id))) s.add(DirectiveKind::kConsent, r.id);
    }
    if (!s.empty()) return AutoSignal{std::move(s)};
  }

  if (const PolicyRule* rule = best_match<PromptThreshold>(rules, origin.host)) {
    const auto& t = std::get<PromptThreshold>(rule->action);
    const Instant window_start = now - std::chrono::days{t.window_days};
    const auto count = std::count_if(record.visits.begin(), record.visits.end(),
                                     [&](Instant v) { return v > window_start && v <= now; });
    if (count >= t.visits) return Prompt{undecided};
    return NoAction{true};
  }
  return NoAction{};
}

void note_visit(OriginRecord& record, Instant now, std::span<const PolicyRule> rules) {
  const auto today = std::chrono::floor<std::chrono::days>(now);
  if (record.visits.empty() || std::chrono::floor<std::chrono::days>(record.visits.back()) != today) {
    record.visits.push_back(now);
  }
  int window = 1;
  for (const auto& rule : rules) {
    if (const auto* t = std::get_if<PromptThreshold>(&rule.action)) window = std::max(window, t->window_days);
  }
  const Instant cutoff = now - std::chrono::days{window};
  std::erase_if(record.visits, [&](Instant v) { return v <= cutoff; });
}

}  // namespace adpc
