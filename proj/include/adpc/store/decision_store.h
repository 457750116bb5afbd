#pragma once

#include "adpc/core/decision.h"
#include "adpc/store/clock.h"
#include "adpc/store/event_log.h"
#include "adpc/store/origin.h"
#include "adpc/store/origin_record.h"
#include "adpc/store/policy.h"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace adpc {

struct StoreOptions {
  bool durable = true;  // fsync before rename
  bool wait_for_lock = false;
};

// Per-profile decision state: origin records, policy rules and the receipt
// event log. Single writer: one DecisionStore instance owns a profile
// directory (enforced with an exclusive lock file) and must not be mutated
// from two threads at once.
//
// Profile layout:
//   events.jsonl  header line {"adpcStore":1}, then one event per line
//   state.json    origin records and policy rules
class DecisionStore {
 public:
  // Throws Error(kLocked) when another writer holds the profile, Error(kIo)
  // on unreadable files.
  static DecisionStore open(const std::filesystem::path& profile_dir, const Clock& clock, StoreOptions options = {});
  static DecisionStore in_memory(const Clock& clock);

  DecisionStore(DecisionStore&&) noexcept;
  DecisionStore& operator=(DecisionStore&&) noexcept;
  ~DecisionStore();

  const DecisionEvent& record_event(const Origin& origin, EventDirection direction, std::string payload);
  ChainVerdict verify_chain() const;
  std::string export_receipts(const std::optional<Origin>& filter) const;
  const EventLog& log() const noexcept { return log_; }

  // Empty map for unseen origins.
  DecisionMap current_decisions(const Origin& origin) const;

  const OriginRecord* find(const Origin& origin) const;
  // Existing record or a fresh one for `origin`; not persisted until commit().
  OriginRecord& record(const Origin& origin);
  std::vector<Origin> origins() const;

  const std::vector<PolicyRule>& policies() const noexcept { return policies_; }
  // Validates, assigns an id and commits.
  PolicyRule add_policy(PolicyRule rule);
  bool remove_policy(std::uint64_t id);

  // Persists origin records and policies (atomic replace). No-op in memory.
  void commit();

  const Clock& clock() const noexcept { return *clock_; }
  const std::optional<std::filesystem::path>& profile_dir() const noexcept { return dir_; }

 private:
  DecisionStore(const Clock& clock, EventLog log);
  void load_state();

  const Clock* clock_;
  EventLog log_;
  std::map<Origin, OriginRecord> records_;
  std::vector<PolicyRule> policies_;
  std::uint64_t next_policy_id_ = 1;
  std::optional<std::filesystem::path> dir_;
  StoreOptions options_;
  int lock_fd_ = -1;
};

}  // namespace adpc
