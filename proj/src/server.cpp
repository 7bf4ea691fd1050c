#include "dbevo/server.hpp"

#include <cstdlib>
#include <functional>

#include <httplib.h>

namespace dbevo {

namespace {

using httplib::Request;
using httplib::Response;
using Handler = std::function<void(const Request&, Response&)>;

void send(Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, const Error& e, int status = 0) {
  send(res, status ? status : http_status(e.code()), error_json(e));
}

Handler guarded(Handler fn) {
  return [fn = std::move(fn)](const Request& req, Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const nlohmann::json::exception& e) {
      send_error(res, Error(ErrorCode::ParseFailure, e.what()));
    } catch (const std::exception& e) {
      send(res, 500, {{"code", "InternalError"}, {"message", e.what()}});
    }
  };
}

nlohmann::json body_json(const Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseFailure, std::string("request body is not JSON: ") + e.what());
  }
}

std::size_t index_param(const std::string& s, ErrorCode code) {
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw Error(code, "not an index: " + s);
  return v;
}

nlohmann::json pending_refs(const Plan& plan) {
  nlohmann::json out = nlohmann::json::array();
  auto tree = plan.tree_json();
  for (const auto& r : tree["references"]) {
    if (r["status"] == "pending") out.push_back(r);
  }
  return out;
}

}  // namespace

void install_routes(httplib::Server& server, SessionStore& store) {
  server.Post("/sessions", guarded([&store](const Request& req, Response& res) {
    std::string dump;
    PlanOptions opts;
    if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0) {
      auto j = body_json(req);
      if (!j.is_object() || !j.contains("dump") || !j.at("dump").is_string()) {
        throw Error(ErrorCode::ParseFailure, "expected {\"dump\": text}");
      }
      dump = j.at("dump").get<std::string>();
      opts.auto_accept_single = j.value("autoAcceptSingle", false);
    } else {
      dump = req.body;
    }
    auto id = store.create(std::move(dump), opts);
    send(res, 201, store.read(id, [](const Session& s) { return s.summary(); }));
  }));

  server.Get("/sessions", guarded([&store](const Request&, Response& res) {
    send(res, 200, {{"sessions", store.ids()}});
  }));

  server.Get(R"(/sessions/([^/]+))", guarded([&store](const Request& req, Response& res) {
    send(res, 200, store.read(req.matches[1], [](const Session& s) { return s.summary(); }));
  }));

  server.Delete(R"(/sessions/([^/]+))", guarded([&store](const Request& req, Response& res) {
    store.remove(req.matches[1]);
    res.status = 204;
  }));

  server.Get(R"(/sessions/([^/]+)/tree)", guarded([&store](const Request& req, Response& res) {
    send(res, 200, store.read(req.matches[1], [](const Session& s) { return s.plan().tree_json(); }));
  }));

  // One operator object or an array of them; an array is added atomically.
  server.Post(R"(/sessions/([^/]+)/operators)", guarded([&store](const Request& req, Response& res) {
    auto j = body_json(req);
    std::vector<Operator> ops;
    if (j.is_array()) {
      for (const auto& o : j) ops.push_back(operator_from_json(o));
    } else {
      ops.push_back(operator_from_json(j));
    }
    auto tree = store.write(req.matches[1], [&](Session& s) {
      Session next = s;
      try {
        for (const auto& o : ops) next.add_operator(o);
      } catch (const Error& e) {
        // A dangling target in the request body is a validation failure, not a missing resource.
        if (http_status(e.code()) == 404) throw Error(ErrorCode::InvalidOperator, e.what(), e.span());
        throw;
      }
      s = std::move(next);
      return s.plan().tree_json();
    });
    send(res, 201, tree);
  }));

  server.Delete(R"(/sessions/([^/]+)/operators/([^/]+))", guarded([&store](const Request& req, Response& res) {
    int op = static_cast<int>(index_param(req.matches[2], ErrorCode::UnknownOperator));
    auto tree = store.write(req.matches[1], [op](Session& s) {
      s.remove_operator(op);
      return s.plan().tree_json();
    });
    send(res, 200, tree);
  }));

  server.Get(R"(/sessions/([^/]+)/references/([^/]+)/recommendations)",
             guarded([&store](const Request& req, Response& res) {
               std::size_t ref = index_param(req.matches[2], ErrorCode::UnknownReference);
               send(res, 200, store.read(req.matches[1], [ref](const Session& s) { return s.recommendations(ref); }));
             }));

  server.Post(R"(/sessions/([^/]+)/decisions)", guarded([&store](const Request& req, Response& res) {
    auto d = decision_request_from_json(body_json(req));
    auto tree = store.write(req.matches[1], [&d](Session& s) {
      s.decide(d);
      return s.plan().tree_json();
    });
    send(res, 200, tree);
  }));

  server.Post(R"(/sessions/([^/]+)/patch)", guarded([&store](const Request& req, Response& res) {
    auto j = body_json(req);
    bool commit = j.value("commit", false);
    std::vector<Waiver> waivers;
    if (j.contains("waive")) {
      for (const auto& w : j.at("waive")) waivers.push_back({w.get<std::string>(), "waived over the API"});
    }
    store.read(req.matches[1], [&](const Session& s) {
      try {
        auto out = s.patch(commit, waivers);
        send(res, 200,
             {{"sql", out.patch.text()},
              {"report", out.report.to_json()},
              {"provenance", out.patch.provenance_json()}});
      } catch (const Error& e) {
        auto body = error_json(e);
        if (e.code() == ErrorCode::PendingDecisions) body["pending"] = pending_refs(s.plan());
        if (e.code() == ErrorCode::UnresolvedHumanDecision) {
          body["humanDecisions"] = s.plan().unresolved_human_decisions();
        }
        send(res, http_status(e.code()), body);
      }
      return 0;
    });
  }));
}

bool serve(const ServeOptions& options, std::ostream& log) {
  std::optional<std::filesystem::path> dir;
  if (options.data_dir) {
    dir = *options.data_dir;
  } else if (const char* env = std::getenv("DBE_DATA_DIR"); env && *env) {
    dir = env;
  }
  SessionStore store(dir);
  for (const auto& f : store.load_all()) log << "skipped unreadable session file " << f << '\n';

  httplib::Server server;
  // SO_REUSEADDR only: the library default (SO_REUSEPORT) lets a second instance share a taken port.
  server.set_socket_options([](auto sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  install_routes(server, store);
  int port = options.port;
  if (port == 0) {
    port = server.bind_to_any_port(options.host);
    if (port < 0) return false;
  } else if (!server.bind_to_port(options.host, port)) {
    return false;
  }
  log << "listening on " << options.host << ':' << port << std::endl;
  return server.listen_after_bind();
}

}  // namespace dbevo
