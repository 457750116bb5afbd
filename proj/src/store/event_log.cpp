#include "adpc/store/event_log.h"

#include "adpc/core/digest.h"
#include "adpc/core/error.h"
#include "adpc/store/atomic_file.h"

#include <nlohmann/json.hpp>

#include <fstream>
#include <istream>
#include <sstream>

namespace adpc {

std::string_view to_string(EventDirection d) noexcept {
  switch (d) {
    case EventDirection::kSent: return "sent";
    case EventDirection::kReceived: return "received";
    case EventDirection::kResourceSeen: return "resource-seen";
    case EventDirection::kUserDecided: return "user-decided";
  }
  return "";
}

std::optional<EventDirection> parse_event_direction(std::string_view s) noexcept {
  for (auto d : {EventDirection::kSent, EventDirection::kReceived, EventDirection::kResourceSeen,
                 EventDirection::kUserDecided}) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

std::string compute_event_hash(const DecisionEvent& e) {
  std::string material;
  material.reserve(e.prev_hash.size() + e.timestamp.size() + e.origin.size() + e.payload.size() + 48);
  material += e.prev_hash;
  material += '\n';
  material += std::to_string(e.seq);
  material += '\n';
  material += e.timestamp;
  material += '\n';
  material += e.origin;
  material += '\n';
  material += to_string(e.direction);
  material += '\n';
  material += e.payload;
  return sha256_hex(material);
}

std::string to_json_line(const DecisionEvent& e) {
  nlohmann::ordered_json j;
  j["seq"] = e.seq;
  j["ts"] = e.timestamp;
  j["origin"] = e.origin;
  j["dir"] = to_string(e.direction);
  j["payload"] = e.payload;
  j["prev"] = e.prev_hash;
  j["hash"] = e.hash;
  return j.dump();
}

DecisionEvent event_from_json_line(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kSchema, "event line is not a JSON object");
  auto str = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw Error(ErrorCode::kSchema, std::string("event line lacks string '") + key + "'");
    }
    return it->get<std::string>();
  };
  auto seq = j.find("seq");
  if (seq == j.end() || !seq->is_number_unsigned()) throw Error(ErrorCode::kSchema, "event line lacks 'seq'");
  DecisionEvent e;
  e.seq = seq->get<std::uint64_t>();
  e.timestamp = str("ts");
  e.origin = str("origin");
  auto dir = parse_event_direction(str("dir"));
  if (!dir) throw Error(ErrorCode::kSchema, "event line has unknown 'dir'");
  e.direction = *dir;
  e.payload = str("payload");
  e.prev_hash = str("prev");
  e.hash = str("hash");
  return e;
}

ChainVerdict verify_events(std::span<const DecisionEvent> events) {
  std::string expected_prev(kGenesisHash);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const std::uint64_t want_seq = i + 1;
    if (e.seq != want_seq) return {false, want_seq, "seq out of order"};
    if (e.prev_hash != expected_prev) return {false, want_seq, "prev does not link to the preceding event"};
    if (compute_event_hash(e) != e.hash) return {false, want_seq, "hash mismatch"};
    expected_prev = e.hash;
  }
  return {};
}

ChainVerdict verify_event_stream(std::istream& in, bool expect_header, LinkCheck links) {
  std::string line;
  if (expect_header) {
    if (!std::getline(in, line) || line != kStoreHeaderLine) return {false, 0, "store header damaged"};
  }
  std::string expected_prev(kGenesisHash);
  std::uint64_t last_seq = 0;
  while (std::getline(in, line)) {
    const std::uint64_t want_seq = last_seq + 1;
    DecisionEvent e;
    try {
      e = event_from_json_line(line);
    } catch (const Error& err) {
      return {false, want_seq, err.detail()};
    }
    // Byte-exact: whitespace or escaping changes are tampering too.
    if (to_json_line(e) != line) return {false, want_seq, "line is not in canonical form"};
    if (links == LinkCheck::kFullChain) {
      if (e.seq != want_seq) return {false, want_seq, "seq out of order"};
      if (e.prev_hash != expected_prev) return {false, want_seq, "prev does not link to the preceding event"};
    } else if (e.seq <= last_seq) {
      return {false, want_seq, "seq not increasing"};
    }
    if (compute_event_hash(e) != e.hash) return {false, e.seq, "hash mismatch"};
    expected_prev = e.hash;
    last_seq = e.seq;
  }
  return {};
}

EventLog::EventLog(std::filesystem::path file, bool durable) : file_(std::move(file)), durable_(durable) {
  if (!std::filesystem::exists(*file_)) {
    atomic_write_file(*file_, render(), durable_);
    return;
  }
  const std::string content = read_file(*file_);
  std::istringstream in(content);
  ChainVerdict verdict = verify_event_stream(in, true, LinkCheck::kFullChain);
  if (!verdict.ok) load_failure_ = verdict;

  std::istringstream lines(content);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    if (!verdict.ok && events_.size() + 1 >= verdict.first_bad_seq) break;
    events_.push_back(event_from_json_line(line));
  }
}

const DecisionEvent& EventLog::append(std::string origin, EventDirection direction, std::string payload,
                                      std::string timestamp) {
  if (load_failure_) {
    throw Error(ErrorCode::kChainCorrupt, "log fails verification at seq " +
                                              std::to_string(load_failure_->first_bad_seq) + " (" +
                                              load_failure_->reason + "); refusing to append");
  }
  if (!events_.empty() && compute_event_hash(events_.back()) != events_.back().hash) {
    throw Error(ErrorCode::kChainCorrupt,
                "tail event " + std::to_string(events_.back().seq) + " fails verification; refusing to append");
  }

  DecisionEvent e;
  e.seq = events_.size() + 1;
  e.timestamp = std::move(timestamp);
  e.origin = std::move(origin);
  e.direction = direction;
  e.payload = std::move(payload);
  e.prev_hash = events_.empty() ? std::string(kGenesisHash) : events_.back().hash;
  e.hash = compute_event_hash(e);
  events_.push_back(std::move(e));

  if (file_) {
    try {
      atomic_write_file(*file_, render(), durable_);
    } catch (...) {
      events_.pop_back();
      throw;
    }
  }
  return events_.back();
}

ChainVerdict EventLog::verify() const {
  if (!file_) return verify_events(events_);
  std::ifstream in(*file_, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open event log '" + file_->string() + "'");
  return verify_event_stream(in, true, LinkCheck::kFullChain);
}

std::string EventLog::export_lines(const std::optional<std::string>& origin_filter) const {
  std::string out;
  for (const auto& e : events_) {
    if (origin_filter && e.origin != *origin_filter) continue;
    out += to_json_line(e);
    out += '\n';
  }
  return out;
}

std::string EventLog::render() const {
  std::string out(kStoreHeaderLine);
  out += '\n';
  out += export_lines(std::nullopt);
  return out;
}

nlohmann::ordered_json to_json(const ChainVerdict& v, std::size_t events) {
  nlohmann::ordered_json j;
  j["ok"] = v.ok;
  j["firstBadSeq"] = v.ok ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v.first_bad_seq);
  j["reason"] = v.reason;
  j["events"] = events;
  return j;
}

}  // namespace adpc
