#include "adpc/http/network_client.h"

#include "adpc/core/error.h"
#include "adpc/store/origin.h"

#include <httplib.h>

namespace adpc::http {

Response NetworkClient::send(const Request& request) {
  Origin origin;
  try {
    origin = Origin::parse(request.url);
  } catch (const Error& e) {
    throw Error(ErrorCode::kFetch, e.detail());
  }
  const std::string scheme_host_port =
      origin.scheme + "://" + origin.host + ":" + std::to_string(origin.port);
  httplib::Client client(scheme_host_port);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);

  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);

  const std::string path = url_path(request.url);
  httplib::Result result;
  if (request.method == "GET") {
    result = client.Get(path, headers);
  } else if (request.method == "POST") {
    result = client.Post(path, headers, request.body, "application/json");
  } else if (request.method == "DELETE") {
    result = client.Delete(path, headers, request.body, "application/json");
  } else if (request.method == "HEAD") {
    result = client.Head(path, headers);
  } else {
    throw Error(ErrorCode::kFetch, "unsupported method " + request.method);
  }
  if (!result) {
    throw Error(ErrorCode::kFetch, request.method + " " + request.url + " failed: " + httplib::to_string(result.error()));
  }
  Response out;
  out.status = result->status;
  out.body = result->body;
  for (const auto& [k, v] : result->headers) out.headers.emplace_back(k, v);
  return out;
}

}  // namespace adpc::http
