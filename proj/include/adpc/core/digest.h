#pragma once

#include "adpc/core/signal.h"

#include <string>
#include <string_view>

namespace adpc {

// 64 lowercase hex chars.
std::string sha256_hex(std::string_view data);

inline constexpr std::size_t kDigestHexLength = 16;

// First 16 hex chars of SHA-256 over the canonical serialization.
// Throws Error(kEmpty) for an empty set.
std::string canonical_digest(const SignalSet& s);

bool is_digest(std::string_view s) noexcept;

}  // namespace adpc
