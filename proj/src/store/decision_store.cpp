#include "adpc/store/decision_store.h"

#include "adpc/core/error.h"
#include "adpc/store/atomic_file.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace adpc {
namespace {

constexpr const char* kEventsFile = "events.jsonl";
constexpr const char* kStateFile = "state.json";
constexpr const char* kLockFile = "lock";

int acquire_lock(const std::filesystem::path& dir, bool wait) {
  const auto path = dir / kLockFile;
  int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
  if (fd < 0) {
    throw Error(ErrorCode::kIo, "cannot open lock file '" + path.string() + "': " + std::strerror(errno));
  }
  int rc;
  do {
    rc = ::flock(fd, LOCK_EX | (wait ? 0 : LOCK_NB));
  } while (rc != 0 && errno == EINTR);
  if (rc != 0) {
    ::close(fd);
    throw Error(ErrorCode::kLocked, "profile '" + dir.string() + "' is in use by another writer");
  }
  return fd;
}

}  // namespace

DecisionStore::DecisionStore(const Clock& clock, EventLog log) : clock_(&clock), log_(std::move(log)) {}

DecisionStore::DecisionStore(DecisionStore&& other) noexcept
    : clock_(other.clock_),
      log_(std::move(other.log_)),
      records_(std::move(other.records_)),
      policies_(std::move(other.policies_)),
      next_policy_id_(other.next_policy_id_),
      dir_(std::move(other.dir_)),
      options_(other.options_),
      lock_fd_(std::exchange(other.lock_fd_, -1)) {}

DecisionStore& DecisionStore::operator=(DecisionStore&& other) noexcept {
  if (this != &other) {
    if (lock_fd_ >= 0) ::close(lock_fd_);
    clock_ = other.clock_;
    log_ = std::move(other.log_);
    records_ = std::move(other.records_);
    policies_ = std::move(other.policies_);
    next_policy_id_ = other.next_policy_id_;
    dir_ = std::move(other.dir_);
    options_ = other.options_;
    lock_fd_ = std::exchange(other.lock_fd_, -1);
  }
  return *this;
}

DecisionStore::~DecisionStore() {
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

DecisionStore DecisionStore::in_memory(const Clock& clock) { return DecisionStore(clock, EventLog()); }

DecisionStore DecisionStore::open(const std::filesystem::path& profile_dir, const Clock& clock,
                                  StoreOptions options) {
  std::error_code ec;
  std::filesystem::create_directories(profile_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create profile '" + profile_dir.string() + "': " + ec.message());
  const int fd = acquire_lock(profile_dir, options.wait_for_lock);
  try {
    DecisionStore store(clock, EventLog(profile_dir / kEventsFile, options.durable));
    store.dir_ = profile_dir;
    store.options_ = options;
    store.lock_fd_ = fd;
    store.load_state();
    return store;
  } catch (...) {
    ::close(fd);
    throw;
  }
}

void DecisionStore::load_state() {
  const auto path = *dir_ / kStateFile;
  if (!std::filesystem::exists(path)) return;
  try {
    auto j = nlohmann::json::parse(read_file(path));
    for (const auto& r : j.at("origins")) {
      OriginRecord rec = origin_record_from_json(r);
      records_.emplace(rec.origin, std::move(rec));
    }
    for (const auto& p : j.at("policies")) policies_.push_back(policy_rule_from_json(p));
    next_policy_id_ = j.value("nextPolicyId", std::uint64_t{1});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, "state file '" + path.string() + "' is malformed: " + e.what());
  }
}

void DecisionStore::commit() {
  if (!dir_) return;
  nlohmann::ordered_json j;
  j["adpcState"] = 1;
  j["nextPolicyId"] = next_policy_id_;
  j["origins"] = nlohmann::ordered_json::array();
  for (const auto& [origin, rec] : records_) j["origins"].push_back(to_json(rec));
  j["policies"] = nlohmann::ordered_json::array();
  for (const auto& p : policies_) j["policies"].push_back(to_json(p));
  atomic_write_file(*dir_ / kStateFile, j.dump(2) + "\n", options_.durable);
}

const DecisionEvent& DecisionStore::record_event(const Origin& origin, EventDirection direction,
                                                 std::string payload) {
  return log_.append(origin.to_string(), direction, std::move(payload), format_rfc3339(clock_->now()));
}

ChainVerdict DecisionStore::verify_chain() const { return log_.verify(); }

std::string DecisionStore::export_receipts(const std::optional<Origin>& filter) const {
  return log_.export_lines(filter ? std::optional<std::string>(filter->to_string()) : std::nullopt);
}

DecisionMap DecisionStore::current_decisions(const Origin& origin) const {
  const auto* rec = find(origin);
  return rec ? rec->decisions : DecisionMap{};
}

const OriginRecord* DecisionStore::find(const Origin& origin) const {
  auto it = records_.find(origin);
  return it == records_.end() ? nullptr : &it->second;
}

OriginRecord& DecisionStore::record(const Origin& origin) {
  auto [it, inserted] = records_.try_emplace(origin);
  if (inserted) it->second.origin = origin;
  return it->second;
}

std::vector<Origin> DecisionStore::origins() const {
  std::vector<Origin> out;
  for (const auto& [origin, rec] : records_) out.push_back(origin);
  return out;
}

PolicyRule DecisionStore::add_policy(PolicyRule rule) {
  validate(rule);
  rule.id = next_policy_id_++;
  policies_.push_back(rule);
  commit();
  return rule;
}

bool DecisionStore::remove_policy(std::uint64_t id) {
  auto it = std::find_if(policies_.begin(), policies_.end(), [&](const PolicyRule& r) { return r.id == id; });
  if (it == policies_.end()) return false;
  policies_.erase(it);
  commit();
  return true;
}

}  // namespace adpc
