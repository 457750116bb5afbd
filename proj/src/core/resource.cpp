#include "adpc/core/resource.h"

#include "adpc/core/error.h"

#include <algorithm>

namespace adpc {

std::string_view to_string(Basis b) noexcept {
  return b == Basis::kConsent ? "consent" : "legitimate-interest";
}

ConsentRequestsList::ConsentRequestsList(std::string version, std::vector<ConsentRequest> consent_requests,
                                         std::vector<ConsentRequest> legitimate_interests)
    : version_(std::move(version)), consent_(std::move(consent_requests)), legit_(std::move(legitimate_interests)) {
  if (version_.empty()) {
    throw Error(ErrorCode::kSchema, "consent-requests resource has an empty version");
  }
  std::set<RequestId> seen;
  for (const auto* list : {&consent_, &legit_}) {
    for (const auto& r : *list) {
      if (!seen.insert(r.id).second) {
        throw Error(ErrorCode::kDuplicateId, "request id '" + r.id.str() + "' appears more than once");
      }
      if (r.text.empty()) {
        throw Error(ErrorCode::kSchema, "request '" + r.id.str() + "' has empty text");
      }
    }
  }
}

const ConsentRequest* ConsentRequestsList::find(const RequestId& id) const {
  for (const auto* list : {&consent_, &legit_}) {
    auto it = std::find_if(list->begin(), list->end(), [&](const ConsentRequest& r) { return r.id == id; });
    if (it != list->end()) return &*it;
  }
  return nullptr;
}

std::optional<Basis> ConsentRequestsList::basis_of(const RequestId& id) const {
  auto has = [&](const std::vector<ConsentRequest>& list) {
    return std::any_of(list.begin(), list.end(), [&](const ConsentRequest& r) { return r.id == id; });
  };
  if (has(consent_)) return Basis::kConsent;
  if (has(legit_)) return Basis::kLegitimateInterest;
  return std::nullopt;
}

bool is_valid_utf8(std::string_view bytes) noexcept {
  std::size_t i = 0;
  const std::size_t n = bytes.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(bytes[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= n) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(bytes[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

namespace {

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorCode::kSchema, what); }

bool is_lower_tag(std::string_view tag) {
  return !tag.empty() && std::all_of(tag.begin(), tag.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
  });
}

ConsentRequest parse_entry(const nlohmann::json& j, std::string_view list_name, std::size_t index) {
  const std::string where = std::string(list_name) + "[" + std::to_string(index) + "]";
  if (!j.is_object()) schema(where + " is not an object");

  auto id_it = j.find("id");
  if (id_it == j.end() || !id_it->is_string()) schema(where + " lacks a string 'id'");
  const auto& id_str = id_it->get_ref<const std::string&>();
  if (!RequestId::is_valid(id_str)) schema(where + " has invalid id '" + id_str + "'");

  auto text_it = j.find("text");
  if (text_it == j.end() || !text_it->is_string() || text_it->get_ref<const std::string&>().empty()) {
    schema(where + " lacks a non-empty string 'text'");
  }

  ConsentRequest r{RequestId(id_str), text_it->get<std::string>(), {}, {}, std::nullopt};

  if (auto it = j.find("purpose"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) schema(where + ".purpose is not a string");
    r.purpose = it->get<std::string>();
  }
  if (auto it = j.find("tags"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) schema(where + ".tags is not an array");
    for (const auto& t : *it) {
      if (!t.is_string() || !is_lower_tag(t.get_ref<const std::string&>())) {
        schema(where + ".tags must be lowercase tokens");
      }
      r.tags.insert(t.get<std::string>());
    }
  }
  if (auto it = j.find("vocab"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) schema(where + ".vocab is not a string");
    r.vocab = it->get<std::string>();
  }
  return r;
}

std::vector<ConsentRequest> parse_list(const nlohmann::json& doc, const char* name, bool required) {
  std::vector<ConsentRequest> out;
  auto it = doc.find(name);
  if (it == doc.end() || (!required && it->is_null())) {
    if (required) schema(std::string("missing '") + name + "' array");
    return out;
  }
  if (!it->is_array()) schema(std::string("'") + name + "' is not an array");
  for (std::size_t i = 0; i < it->size(); ++i) out.push_back(parse_entry((*it)[i], name, i));
  return out;
}

}  // namespace

ConsentRequestsList parse_requests_resource(std::string_view text) {
  if (!is_valid_utf8(text)) {
    throw Error(ErrorCode::kEncoding, "consent-requests resource is not valid UTF-8");
  }
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) schema("consent-requests resource is not valid JSON");
  if (!doc.is_object()) schema("consent-requests resource is not a JSON object");

  auto version = doc.find("version");
  if (version == doc.end() || !version->is_string() || version->get_ref<const std::string&>().empty()) {
    schema("missing non-empty string 'version'");
  }
  auto consent = parse_list(doc, "consentRequests", true);
  auto legit = parse_list(doc, "legitimateInterests", false);
  return ConsentRequestsList(version->get<std::string>(), std::move(consent), std::move(legit));
}

ConsentRequestsList parse_requests_resource(std::span<const std::byte> bytes) {
  return parse_requests_resource(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

nlohmann::ordered_json to_json(const ConsentRequest& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id.str();
  j["text"] = r.text;
  j["purpose"] = r.purpose;
  if (!r.tags.empty()) j["tags"] = r.tags;
  if (r.vocab) j["vocab"] = *r.vocab;
  return j;
}

nlohmann::ordered_json to_json(const ConsentRequestsList& list) {
  nlohmann::ordered_json j;
  j["version"] = list.version();
  j["consentRequests"] = nlohmann::ordered_json::array();
  for (const auto& r : list.consent_requests()) j["consentRequests"].push_back(to_json(r));
  j["legitimateInterests"] = nlohmann::ordered_json::array();
  for (const auto& r : list.legitimate_interests()) j["legitimateInterests"].push_back(to_json(r));
  return j;
}

std::string serialize_requests_resource(const ConsentRequestsList& list) { return to_json(list).dump(2) + "\n"; }

}  // namespace adpc
