#pragma once

#include "adpc/core/signal.h"
#include "adpc/http/message.h"
#include "adpc/store/decision_store.h"

#include <nlohmann/json.hpp>

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace adpc::agent {

struct AgentConfig {
  std::chrono::seconds support_ttl{std::chrono::hours{24}};
};

// Local API decision submission: {origin, consent, refuse, withdraw, object, generals}.
struct DecisionInput {
  std::vector<std::string> consent;
  std::vector<std::string> refuse;
  std::vector<std::string> withdraw;
  std::vector<std::string> object;
  std::vector<std::string> generals;

  // Throws Error(kSyntax) for bad tokens, kConflict, kEmpty.
  SignalSet to_signal_set() const;
};

// Throws Error(kSchema). `origin` is read separately by the caller.
DecisionInput decision_input_from_json(const nlohmann::json& j);

// Local API origin record shape: {origin, support, decisions, lastVersion}.
nlohmann::ordered_json origin_summary_json(const OriginRecord& record);

// Subject-side engine. All operations on one Agent are serialized.
class Agent {
 public:
  Agent(DecisionStore& store, http::Client& client, AgentConfig config = {});

  SupportStatus observe_response(const Origin& origin, const http::Headers& headers,
                                 const std::vector<http::LinkTarget>& links);

  // Throws Error(kNotSupported) when the support cache is not valid,
  // Error(kFetch) on transport or HTTP failure (stored state untouched), and
  // resource parse errors (kSchema, kEncoding, kDuplicateId).
  std::optional<PendingPrompt> sync_requests(const Origin& origin);

  // Full current decision state in canonical form, or nothing.
  std::optional<std::string> prepare_request_fields(const Origin& origin) const;

  // Atomic: on error nothing is stored. Throws Error(kNotSupported) when no
  // requests resource is tracked for the origin.
  SignalSet decide(const Origin& origin, const SignalSet& decisions);
  SignalSet decide(const Origin& origin, const DecisionInput& input) { return decide(origin, input.to_signal_set()); }

  // One page load: attach field, send, observe, count the visit, sync.
  // Transport failures propagate as Error(kFetch).
  http::Response visit(const std::string& url);

  std::vector<PendingPrompt> pending_prompts() const;
  std::vector<std::string> queued(const Origin& origin) const;

  DecisionStore& store() noexcept { return *store_; }
  const DecisionStore& store() const noexcept { return *store_; }
  std::recursive_mutex& mutex() const noexcept { return mutex_; }

 private:
  std::optional<PendingPrompt> run_policy(OriginRecord& record);
  void resolve_ack(OriginRecord& record, const std::optional<std::string>& ack);

  DecisionStore* store_;
  http::Client* client_;
  AgentConfig config_;
  mutable std::recursive_mutex mutex_;
};

}  // namespace adpc::agent
