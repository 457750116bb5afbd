#include "adpc/core/digest.h"

#include "adpc/core/error.h"
#include "adpc/core/grammar.h"

#include <openssl/evp.h>

#include <algorithm>
#include <array>

namespace adpc {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0x0F]);
  }
  return out;
}

std::string canonical_digest(const SignalSet& s) {
  return sha256_hex(serialize_signal_set(s)).substr(0, kDigestHexLength);
}

bool is_digest(std::string_view s) noexcept {
  return s.size() == kDigestHexLength &&
         std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

}  // namespace adpc
