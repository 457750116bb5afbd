#pragma once

#include "adpc/http/message.h"

#include <functional>
#include <memory>
#include <string>

namespace adpc::http {

// Socket listener that hands every request to one handler. Request URLs are
// rebuilt as absolute http URLs from the Host field.
class Server {
 public:
  using Handler = std::function<Response(const Request&)>;

  explicit Server(Handler handler);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds host:port (port 0 picks a free one) and returns the bound port.
  // Throws Error(kBind).
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  // Serves on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace adpc::http
