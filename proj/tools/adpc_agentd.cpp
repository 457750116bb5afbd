// Long-running agent exposing the local API on a loopback port.

#include "adpc/agent/local_api.h"
#include "adpc/core/error.h"
#include "adpc/http/network_client.h"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  std::string profile;
  if (const char* p = std::getenv("ADPC_PROFILE"); p && *p) {
    profile = p;
  } else {
    const char* home = std::getenv("HOME");
    profile = (std::filesystem::path(home ? home : ".") / ".adpc").string();
  }
  std::string host = "127.0.0.1";
  int port = 7878;
  std::string token;
  long long ttl_seconds = 24 * 3600;

  CLI::App app{"ADPC agent daemon with a token-protected local API", "adpc-agentd"};
  app.add_option("--profile", profile, "Profile directory (env ADPC_PROFILE, default ~/.adpc)");
  app.add_option("--host", host, "Loopback address to bind")->capture_default_str();
  app.add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
  app.add_option("--token", token, "Bearer token (random when omitted)");
  app.add_option("--support-ttl", ttl_seconds, "Seconds a support observation stays valid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    adpc::SystemClock clock;
    adpc::DecisionStore store = adpc::DecisionStore::open(profile, clock);
    adpc::http::NetworkClient client;
    adpc::agent::Agent agent(store, client, adpc::agent::AgentConfig{std::chrono::seconds{ttl_seconds}});
    adpc::agent::LocalApi api(agent, token);
    const int bound = api.bind(host, port);
    std::cout << "listening on http://" << host << ":" << bound << "\n"
              << "token " << api.token() << std::endl;
    api.listen();
  } catch (const adpc::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
