#include "adpc/http/server.h"

#include "adpc/core/error.h"

#include <httplib.h>

#include <thread>

namespace adpc::http {

struct Server::Impl {
  httplib::Server server;
  Handler handler;
  std::string host;
  int port = 0;
  std::thread thread;
};

Server::Server(Handler handler) : impl_(std::make_unique<Impl>()) {
  impl_->handler = std::move(handler);
  auto dispatch = [impl = impl_.get()](const httplib::Request& in, httplib::Response& out) {
    Request req;
    req.method = in.method;
    std::string host = in.get_header_value("Host");
    if (host.empty()) host = impl->host + ":" + std::to_string(impl->port);
    req.url = "http://" + host + in.target;
    for (const auto& [k, v] : in.headers) {
      // httplib injects these for its own bookkeeping.
      if (iequals(k, "REMOTE_ADDR") || iequals(k, "REMOTE_PORT") || iequals(k, "LOCAL_ADDR") ||
          iequals(k, "LOCAL_PORT")) {
        continue;
      }
      req.headers.emplace_back(k, v);
    }
    req.body = in.body;

    Response resp = impl->handler(req);
    out.status = resp.status;
    std::string content_type = "text/plain";
    for (const auto& [k, v] : resp.headers) {
      if (iequals(k, "Content-Type")) {
        content_type = v;
      } else {
        out.headers.emplace(k, v);
      }
    }
    if (!resp.body.empty() || resp.status != 304) out.set_content(resp.body, content_type);
  };
  auto& s = impl_->server;
  // httplib's default also sets SO_REUSEPORT, which lets a second listener
  // share a busy port instead of failing.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  s.Get(".*", dispatch);
  s.Post(".*", dispatch);
  s.Delete(".*", dispatch);
  s.Put(".*", dispatch);
  s.Options(".*", dispatch);
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  impl_->host = host;
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw Error(ErrorCode::kBind, "cannot bind " + host + ":" + std::to_string(port));
  impl_->port = bound;
  return bound;
}

void Server::listen() { impl_->server.listen_after_bind(); }

void Server::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void Server::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace adpc::http
