#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adpc {

// Stable error codes. The string form (E_SYNTAX, ...) is part of the local API
// and CLI output, so never renumber or rename.
enum class ErrorCode {
  kSyntax,
  kConflict,
  kDirection,
  kEmpty,
  kSchema,
  kDuplicateId,
  kEncoding,
  kBadTransition,
  kWrongBasis,
  kUnknownId,
  kIo,
  kChainCorrupt,
  kMetaMalformed,
  kFetch,
  kBind,
  kScenario,
  kNotSupported,
  kLocked,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace adpc
