// Demo site: serves pages and the requests resource, honouring ADPC signals.

#include "adpc/core/error.h"
#include "adpc/http/server.h"
#include "adpc/server/controller.h"
#include "adpc/store/atomic_file.h"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

int main(int argc, char** argv) {
  std::string requests_file;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string self;
  std::string audit;

  CLI::App app{"Demo controller that announces consent requests and honours decisions", "adpc-demo-server"};
  app.add_option("--requests", requests_file, "Consent requests resource (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--host", host)->capture_default_str();
  app.add_option("--port", port)->capture_default_str();
  app.add_option("--origin", self, "Public origin used in audit records (default http://host:port)");
  app.add_option("--audit", audit, "Append-only audit log file");
  CLI11_PARSE(app, argc, argv);

  try {
    adpc::SystemClock clock;
    adpc::ConsentRequestsList requests = adpc::parse_requests_resource(adpc::read_file(requests_file));
    adpc::server::ControllerConfig config{
        .self = adpc::Origin::parse(self.empty() ? "http://" + host + ":" + std::to_string(port) : self),
        .requests = std::move(requests),
        .requests_path = std::string(adpc::server::kDefaultRequestsPath),
        .audit_path = audit.empty() ? std::nullopt : std::optional<std::filesystem::path>(audit),
        .durable_audit = true,
    };
    adpc::server::Controller controller(std::move(config), clock);
    adpc::http::Server server([&](const adpc::http::Request& r) { return controller.handle(r); });
    const int bound = server.bind(host, port);
    std::cout << "serving http://" << host << ":" << bound << std::endl;
    server.listen();
  } catch (const adpc::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
