// SPDX-License-Identifier: Apache-2.0
// Serves POST /sample with uniform tool choices for an environment's agents.
#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "jointrl/orchestrator.hpp"

namespace {
std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mock remote policy server", "mock_policy_server"};
  std::string host = "127.0.0.1";
  int port = 0;
  std::string environment = "routing";
  app.add_option("--host", host, "bind address");
  app.add_option("--port", port, "port; 0 picks a free one");
  app.add_option("--environment", environment, "environment whose agents are served");
  CLI11_PARSE(app, argc, argv);

  try {
    auto env = jointrl::make_environment(environment);
    jointrl::MockPolicyServer server(jointrl::uniform_tool_handler(*env));
    const int bound = server.start(host, port);
    std::cout << "listening on http://" << host << ":" << bound << "/sample" << std::endl;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    std::cout << "served " << server.requests_served() << " requests" << std::endl;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
