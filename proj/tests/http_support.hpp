#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include <httplib.h>

#include "dbevo/server.hpp"

namespace dbevo::testing {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("dbevo-session-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

// Serves the API on a free loopback port for the lifetime of the object.
struct TestServer {
  SessionStore store;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit TestServer(std::optional<std::filesystem::path> dir = std::nullopt) : store(std::move(dir)) {
    install_routes(server, store);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~TestServer() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
};

}  // namespace dbevo::testing
