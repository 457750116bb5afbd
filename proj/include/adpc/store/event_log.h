#pragma once

// Append-only, hash-chained decision event log. It is the subject-side
// receipt store and, in the same line format, the controller audit log.
//
// hash = SHA-256(prev "\n" seq "\n" ts "\n" origin "\n" dir "\n" payload)
// Event 1 links to 64 zeros; event n+1 links to event n's hash.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adpc {

enum class EventDirection { kSent, kReceived, kResourceSeen, kUserDecided };

std::string_view to_string(EventDirection d) noexcept;
std::optional<EventDirection> parse_event_direction(std::string_view s) noexcept;

inline constexpr std::string_view kGenesisHash =
    "0000000000000000000000000000000000000000000000000000000000000000";

struct DecisionEvent {
  std::uint64_t seq = 0;
  std::string timestamp;  // RFC 3339, seconds precision, UTC
  std::string origin;
  EventDirection direction = EventDirection::kSent;
  std::string payload;
  std::string prev_hash;
  std::string hash;

  bool operator==(const DecisionEvent&) const = default;
};

// Hash over the event's own fields and its prev_hash.
std::string compute_event_hash(const DecisionEvent& e);

// {"seq":..,"ts":..,"origin":..,"dir":..,"payload":..,"prev":..,"hash":..}
std::string to_json_line(const DecisionEvent& e);
// Throws Error(kSchema).
DecisionEvent event_from_json_line(std::string_view line);

inline constexpr std::string_view kStoreHeaderLine = R"({"adpcStore":1})";

struct ChainVerdict {
  bool ok = true;
  std::uint64_t first_bad_seq = 0;  // 0 when ok, or when the store header is damaged
  std::string reason;
};

// {"ok":..,"firstBadSeq":..,"reason":..,"events":n}
nlohmann::ordered_json to_json(const ChainVerdict& v, std::size_t events);

// Checks every hash, seq continuity from 1 and prev links.
ChainVerdict verify_events(std::span<const DecisionEvent> events);

enum class LinkCheck { kFullChain, kPerEvent };

// Verifies newline-delimited event lines. kPerEvent suits filtered receipt
// exports: each event must hash correctly and seq must increase, but links
// to events outside the export are not checked. An unparseable line is
// attributed to the seq it should have carried.
ChainVerdict verify_event_stream(std::istream& in, bool expect_header, LinkCheck links);

class EventLog {
 public:
  // In-memory log.
  EventLog() = default;
  // File-backed log; loads existing content. A damaged file loads as far as
  // it parses and leaves the log refusing appends.
  EventLog(std::filesystem::path file, bool durable);

  // Throws Error(kChainCorrupt) if the existing tail does not verify, and
  // Error(kIo) if persisting fails (the in-memory log is then unchanged).
  const DecisionEvent& append(std::string origin, EventDirection direction, std::string payload,
                              std::string timestamp);

  // For a file-backed log this re-reads and checks the persisted bytes.
  ChainVerdict verify() const;

  const std::vector<DecisionEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }

  // Matching events in seq order, one line each, original chain fields.
  std::string export_lines(const std::optional<std::string>& origin_filter) const;

  const std::optional<std::filesystem::path>& file() const noexcept { return file_; }

 private:
  std::string render() const;

  std::vector<DecisionEvent> events_;
  std::optional<std::filesystem::path> file_;
  bool durable_ = true;
  std::optional<ChainVerdict> load_failure_;
};

}  // namespace adpc
