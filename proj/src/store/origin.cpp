#include "adpc/store/origin.h"

#include "adpc/core/error.h"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace adpc {

bool is_valid_host(std::string_view host) noexcept {
  if (host.empty() || host.size() > 253) return false;
  std::size_t label_len = 0;
  char prev = '.';
  for (char c : host) {
    if (c == '.') {
      if (label_len == 0 || prev == '-') return false;
      label_len = 0;
    } else {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
      if (!ok || (label_len == 0 && c == '-') || ++label_len > 63) return false;
    }
    prev = c;
  }
  return label_len > 0 && prev != '-';
}

Origin Origin::parse(std::string_view url) {
  auto fail = [&](const char* why) -> Origin {
    throw Error(ErrorCode::kSyntax, std::string(why) + ": '" + std::string(url) + "'");
  };
  const auto sep = url.find("://");
  if (sep == std::string_view::npos) return fail("origin needs a scheme");
  std::string scheme(url.substr(0, sep));
  std::transform(scheme.begin(), scheme.end(), scheme.begin(), [](unsigned char c) { return std::tolower(c); });
  if (scheme != "http" && scheme != "https") return fail("origin scheme must be http or https");

  std::string_view rest = url.substr(sep + 3);
  rest = rest.substr(0, std::min(rest.find_first_of("/?#"), rest.size()));
  if (rest.find('@') != std::string_view::npos) return fail("origin must not carry credentials");

  std::string_view host_part = rest;
  Origin o;
  o.scheme = std::move(scheme);
  o.port = o.default_port();
  if (auto colon = rest.rfind(':'); colon != std::string_view::npos) {
    host_part = rest.substr(0, colon);
    std::string_view port_str = rest.substr(colon + 1);
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(port_str.data(), port_str.data() + port_str.size(), value);
    if (port_str.empty() || ec != std::errc{} || ptr != port_str.data() + port_str.size() || value < 1 ||
        value > 65535) {
      return fail("invalid port");
    }
    o.port = static_cast<std::uint16_t>(value);
  }
  o.host.assign(host_part);
  std::transform(o.host.begin(), o.host.end(), o.host.begin(), [](unsigned char c) { return std::tolower(c); });
  if (!is_valid_host(o.host)) return fail("invalid host");
  return o;
}

std::string Origin::to_string() const {
  std::string out = scheme + "://" + host;
  if (port != default_port()) out += ":" + std::to_string(port);
  return out;
}

std::string resolve_url(const Origin& base, std::string_view target) {
  if (target.starts_with("http://") || target.starts_with("https://")) return std::string(target);
  if (target.starts_with("/") && !target.starts_with("//")) return base.to_string() + std::string(target);
  return {};
}

std::string url_path(std::string_view url) {
  auto sep = url.find("://");
  if (sep == std::string_view::npos) return std::string(url.empty() ? "/" : url);
  auto slash = url.find('/', sep + 3);
  if (slash == std::string_view::npos) return "/";
  return std::string(url.substr(slash));
}

}  // namespace adpc
