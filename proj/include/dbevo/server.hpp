#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "dbevo/session.hpp"

namespace httplib {
class Server;
}

namespace dbevo {

// Registers the session API on `server`. The store must outlive it.
void install_routes(httplib::Server& server, SessionStore& store);

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::string> data_dir;  // falls back to DBE_DATA_DIR
};

// Blocks until the server stops. Returns false when the address cannot be bound.
bool serve(const ServeOptions& options, std::ostream& log);

}  // namespace dbevo
