#include "adpc/core/error.h"

namespace adpc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kSyntax: return "E_SYNTAX";
    case ErrorCode::kConflict: return "E_CONFLICT";
    case ErrorCode::kDirection: return "E_DIRECTION";
    case ErrorCode::kEmpty: return "E_EMPTY";
    case ErrorCode::kSchema: return "E_SCHEMA";
    case ErrorCode::kDuplicateId: return "E_DUPLICATE_ID";
    case ErrorCode::kEncoding: return "E_ENCODING";
    case ErrorCode::kBadTransition: return "E_BAD_TRANSITION";
    case ErrorCode::kWrongBasis: return "E_WRONG_BASIS";
    case ErrorCode::kUnknownId: return "E_UNKNOWN_ID";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kChainCorrupt: return "E_CHAIN_CORRUPT";
    case ErrorCode::kMetaMalformed: return "E_META_MALFORMED";
    case ErrorCode::kFetch: return "E_FETCH";
    case ErrorCode::kBind: return "E_BIND";
    case ErrorCode::kScenario: return "E_SCENARIO";
    case ErrorCode::kNotSupported: return "E_NOT_SUPPORTED";
    case ErrorCode::kLocked: return "E_LOCKED";
  }
  return "E_UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace adpc
