#pragma once

#include "adpc/core/signal.h"

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adpc {

// Legal basis a request id is processed under.
enum class Basis { kConsent, kLegitimateInterest };

std::string_view to_string(Basis b) noexcept;

struct ConsentRequest {
  RequestId id;
  std::string text;
  std::string purpose;
  std::set<std::string> tags;  // lowercase tokens
  std::optional<std::string> vocab;

  bool has_tag(std::string_view tag) const { return tags.contains(std::string(tag)); }

  bool operator==(const ConsentRequest&) const = default;
};

// A controller's versioned list of consent requests and legitimate-interest
// purposes. Ids are unique across both lists.
class ConsentRequestsList {
 public:
  // Throws Error(kSchema) on an empty version, Error(kDuplicateId) on an id
  // appearing twice anywhere.
  ConsentRequestsList(std::string version, std::vector<ConsentRequest> consent_requests,
                      std::vector<ConsentRequest> legitimate_interests = {});

  const std::string& version() const noexcept { return version_; }
  const std::vector<ConsentRequest>& consent_requests() const noexcept { return consent_; }
  const std::vector<ConsentRequest>& legitimate_interests() const noexcept { return legit_; }

  const ConsentRequest* find(const RequestId& id) const;
  std::optional<Basis> basis_of(const RequestId& id) const;
  bool contains(const RequestId& id) const { return find(id) != nullptr; }

  bool operator==(const ConsentRequestsList&) const = default;

 private:
  std::string version_;
  std::vector<ConsentRequest> consent_;
  std::vector<ConsentRequest> legit_;
};

// Unknown top-level and per-entry fields are ignored. Throws Error with
// kEncoding (not UTF-8), kSchema or kDuplicateId.
ConsentRequestsList parse_requests_resource(std::span<const std::byte> bytes);
ConsentRequestsList parse_requests_resource(std::string_view text);

nlohmann::ordered_json to_json(const ConsentRequestsList& list);
nlohmann::ordered_json to_json(const ConsentRequest& request);

// Deterministic wire bytes for serving the resource.
std::string serialize_requests_resource(const ConsentRequestsList& list);

bool is_valid_utf8(std::string_view bytes) noexcept;

}  // namespace adpc
