#pragma once

// Minimal HTTP message values shared by the agent, the controller middleware
// and the simulated network. Field names compare case-insensitively.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adpc::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

inline constexpr std::string_view kAdpcField = "ADPC";

struct Request {
  std::string method = "GET";
  std::string url;  // absolute
  Headers headers;
  std::string body;
};

struct Response {
  int status = 200;
  Headers headers;
  std::string body;
};

bool iequals(std::string_view a, std::string_view b) noexcept;

// All values of `name` joined with ", " (RFC 9110 list semantics), or
// nullopt when absent.
std::optional<std::string> header_value(const Headers& headers, std::string_view name);
std::size_t header_count(const Headers& headers, std::string_view name);
void set_header(Headers& headers, std::string_view name, std::string value);
void add_header(Headers& headers, std::string_view name, std::string value);

struct LinkTarget {
  std::string rel;
  std::string url;

  bool operator==(const LinkTarget&) const = default;
};

// Parses Link field values: <target>; rel="a b", <target2>; rel=c
// Each rel token yields one entry. Malformed members are skipped.
std::vector<LinkTarget> parse_link_header(std::string_view value);
std::vector<LinkTarget> link_targets(const Headers& headers);

// Performs one exchange. Implementations throw Error(kFetch) on transport
// failure; any HTTP status is a successful exchange.
class Client {
 public:
  virtual ~Client() = default;
  virtual Response send(const Request& request) = 0;
};

}  // namespace adpc::http
