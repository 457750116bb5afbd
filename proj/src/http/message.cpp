#include "adpc/http/message.h"

#include <algorithm>
#include <cctype>

namespace adpc::http {

bool iequals(std::string_view a, std::string_view b) noexcept {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::optional<std::string> header_value(const Headers& headers, std::string_view name) {
  std::optional<std::string> out;
  for (const auto& [k, v] : headers) {
    if (!iequals(k, name)) continue;
    if (out) {
      *out += ", ";
      *out += v;
    } else {
      out = v;
    }
  }
  return out;
}

std::size_t header_count(const Headers& headers, std::string_view name) {
  return static_cast<std::size_t>(
      std::count_if(headers.begin(), headers.end(), [&](const auto& kv) { return iequals(kv.first, name); }));
}

void set_header(Headers& headers, std::string_view name, std::string value) {
  std::erase_if(headers, [&](const auto& kv) { return iequals(kv.first, name); });
  headers.emplace_back(std::string(name), std::move(value));
}

void add_header(Headers& headers, std::string_view name, std::string value) {
  headers.emplace_back(std::string(name), std::move(value));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<LinkTarget> parse_link_header(std::string_view value) {
  std::vector<LinkTarget> out;
  std::size_t pos = 0;
  while (pos < value.size()) {
    const auto open = value.find('<', pos);
    if (open == std::string_view::npos) break;
    const auto close = value.find('>', open);
    if (close == std::string_view::npos) break;
    const std::string target(value.substr(open + 1, close - open - 1));

    // Parameters run to the next ',' outside quotes.
    std::size_t end = close + 1;
    bool quoted = false;
    while (end < value.size() && (quoted || value[end] != ',')) {
      if (value[end] == '"') quoted = !quoted;
      ++end;
    }
    std::string_view params = value.substr(close + 1, end - close - 1);
    pos = end + 1;

    while (!params.empty()) {
      const auto semi = params.find(';');
      if (semi == std::string_view::npos) break;
      params.remove_prefix(semi + 1);
      auto next = params.find(';');
      std::string_view param = trim(params.substr(0, next));
      const auto eq = param.find('=');
      if (eq != std::string_view::npos && iequals(trim(param.substr(0, eq)), "rel")) {
        std::string_view rel = trim(param.substr(eq + 1));
        if (rel.size() >= 2 && rel.front() == '"' && rel.back() == '"') rel = rel.substr(1, rel.size() - 2);
        while (!rel.empty()) {
          const auto sp = rel.find(' ');
          std::string token(rel.substr(0, sp));
          std::transform(token.begin(), token.end(), token.begin(),
                         [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
          if (!token.empty()) out.push_back({std::move(token), target});
          if (sp == std::string_view::npos) break;
          rel.remove_prefix(sp + 1);
        }
      }
      if (next == std::string_view::npos) break;
    }
  }
  return out;
}

std::vector<LinkTarget> link_targets(const Headers& headers) {
  std::vector<LinkTarget> out;
  for (const auto& [k, v] : headers) {
    if (!iequals(k, "Link")) continue;
    auto parsed = parse_link_header(v);
    out.insert(out.end(), parsed.begin(), parsed.end());
  }
  return out;
}

}  // namespace adpc::http
