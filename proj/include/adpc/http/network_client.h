#pragma once

#include "adpc/http/message.h"

#include <chrono>

namespace adpc::http {

// Real sockets (http and https) via cpp-httplib.
class NetworkClient final : public Client {
 public:
  explicit NetworkClient(std::chrono::seconds timeout = std::chrono::seconds{10}) : timeout_(timeout) {}
  Response send(const Request& request) override;

 private:
  std::chrono::seconds timeout_;
};

}  // namespace adpc::http
