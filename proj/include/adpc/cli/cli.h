#pragma once

#include "adpc/harness/scenario.h"
#include "adpc/http/message.h"
#include "adpc/store/clock.h"
#include "adpc/store/event_log.h"

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace adpc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct Environment {
  std::optional<std::filesystem::path> profile;  // ADPC_PROFILE, else $HOME/.adpc
  std::optional<std::chrono::seconds> ttl;       // ADPC_TTL_SECONDS
  http::Client* client = nullptr;                // real network when null
  const Clock* clock = nullptr;                  // system clock when null
};

Environment environment_from_process();

// `args` excludes the program name. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Environment& env);

std::string render_report(const harness::SuiteResult& result, bool json);
std::string render_verdict(const ChainVerdict& verdict, std::size_t events, bool json);

}  // namespace adpc::cli
