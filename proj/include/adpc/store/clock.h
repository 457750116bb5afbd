#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace adpc {

using Instant = std::chrono::sys_seconds;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Instant now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Instant now() const override {
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  }
};

// Virtual clock for deterministic runs.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Instant start) : now_(start) {}
  Instant now() const override { return now_; }
  void advance(std::chrono::seconds d) { now_ += d; }
  void set(Instant t) { now_ = t; }

 private:
  Instant now_;
};

// 2024-01-01T00:00:00Z
std::string format_rfc3339(Instant t);
std::optional<Instant> parse_rfc3339(std::string_view s);

}  // namespace adpc
