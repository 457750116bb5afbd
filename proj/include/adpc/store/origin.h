#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace adpc {

// scheme://host[:port], normalized: lowercase host, default port elided in
// the string form.
struct Origin {
  std::string scheme;
  std::string host;
  std::uint16_t port = 0;

  // Accepts an origin or any absolute http(s) URL; path, query and fragment
  // are dropped. Throws Error(kSyntax).
  static Origin parse(std::string_view url);

  std::string to_string() const;
  std::uint16_t default_port() const noexcept { return scheme == "https" ? 443 : 80; }

  auto operator<=>(const Origin&) const = default;
};

bool is_valid_host(std::string_view host) noexcept;

// Resolves `target` (absolute URL, or absolute path) against `base`.
// Returns an empty string when the target is neither.
std::string resolve_url(const Origin& base, std::string_view target);

// Path (with query) component of an absolute URL; "/" when absent.
std::string url_path(std::string_view url);

}  // namespace adpc
