#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "dbevo/session.hpp"
#include "http_support.hpp"
#include "support.hpp"

using namespace dbevo;
using namespace dbevo::testing;
using nlohmann::json;

namespace {

const char* kRenameUid = R"({"op":"RenameColumn","target":"public.person.uid","args":{"new_name":"login"}})";

json parse(const httplib::Result& r) {
  REQUIRE(r);
  return r->body.empty() ? json() : json::parse(r->body);
}

std::string create_session(httplib::Client& c, const std::string& dump) {
  auto r = c.Post("/sessions", json{{"dump", dump}}.dump(), "application/json");
  REQUIRE(r);
  REQUIRE(r->status == 201);
  return json::parse(r->body)["id"].get<std::string>();
}

std::vector<json> pending_of(const json& tree) {
  std::vector<json> out;
  for (const auto& r : tree["references"])
    if (r["status"] == "pending") out.push_back(r);
  return out;
}

std::set<std::string> pending_addresses(const json& tree) {
  std::set<std::string> out;
  for (const auto& r : pending_of(tree)) out.insert(r["address"].dump());
  return out;
}

std::string identity(const json& r) {
  return r["root"].dump() + "|" + r["subset"].get<std::string>() + "|" + r["actionable"].get<std::string>() + "|" +
         r["text"].get<std::string>();
}

std::map<std::string, std::size_t> pending_identities(const json& tree) {
  std::map<std::string, std::size_t> out;
  for (const auto& r : pending_of(tree)) ++out[identity(r)];
  return out;
}

// First pending reference, answered with `kind` when offered and else its first candidate.
json next_decision(const json& tree, const std::string& kind) {
  auto p = pending_of(tree);
  REQUIRE_FALSE(p.empty());
  std::string pick = p.front()["candidates"][0]["operator"]["op"];
  for (const auto& c : p.front()["candidates"])
    if (c["operator"]["op"] == kind) pick = kind;
  return {{"reference", p.front()["address"]}, {"chosen", pick}};
}

}  // namespace

TEST_CASE("a new session has no roots and nothing pending") {
  Session s("s", read_fixture("running_example.sql"));
  CHECK(s.plan().roots.empty());
  CHECK(s.plan().pending() == 0);
  CHECK(s.summary()["closed"] == true);
}

TEST_CASE("a dump that does not parse is rejected") {
  CHECK_THROWS_AS(Session("s", "CREATE TABLE (;"), Error);
  try {
    Session("s", "CREATE VIEW v AS SELECT missing.x FROM missing;");
    FAIL("expected a ParseFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseFailure);
  }
}

TEST_CASE("the select clause reference offers two recommendations with its highlighted source") {
  Session s("s", read_fixture("running_example.sql"));
  s.add_operator(op(kRenameUid));
  std::optional<std::size_t> select_ref;
  for (std::size_t i = 0; i < s.plan().refs.size(); ++i) {
    const auto& r = s.plan().refs[i];
    if (r.actionable == "public.members_directory" && r.label == "column.viewSelect") select_ref = i;
  }
  REQUIRE(select_ref);
  json rec = s.recommendations(*select_ref);
  REQUIRE(rec["candidates"].size() == 2);
  CHECK(rec["candidates"][0]["operator"]["op"] == "AliasInSelectClause");
  CHECK(rec["candidates"][1]["operator"]["op"] == "RenameReferenceInSelectClause");
  CHECK(rec["source"]["entity"] == "public.members_directory");
  CHECK(rec["source"]["highlighted"] == "uid");
  std::string text = rec["source"]["text"];
  std::size_t start = rec["source"]["highlight"]["start"];
  CHECK(text.substr(start - 7, 10) == "person.uid");
}

TEST_CASE("decisions are validated against the candidates") {
  Session s("s", read_fixture("running_example.sql"));
  s.add_operator(op(kRenameUid));
  auto before = s.plan().tree_json();
  DecisionRequest bad_kind{std::size_t{0}, std::string("RemoveView"), std::nullopt, std::nullopt};
  CHECK_THROWS_AS(s.decide(bad_kind), Error);
  DecisionRequest bad_index{std::size_t{0}, std::nullopt, 9, std::nullopt};
  CHECK_THROWS_AS(s.decide(bad_index), Error);
  DecisionRequest bad_ref{std::size_t{99}, std::string("DoNothing"), std::nullopt, std::nullopt};
  CHECK_THROWS_AS(s.decide(bad_ref), Error);
  CHECK(s.plan().tree_json() == before);
  CHECK(s.decisions().empty());
}

TEST_CASE("a decided reference cannot be decided again") {
  Session s("s", read_fixture("running_example.sql"));
  s.add_operator(op(kRenameUid));
  DecisionRequest d{std::size_t{0}, std::nullopt, 0, std::nullopt};
  s.decide(d);
  auto before = s.plan().tree_json();
  try {
    s.decide(d);
    FAIL("expected AlreadyDecided");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlreadyDecided);
  }
  CHECK(s.plan().tree_json() == before);
  CHECK(s.decisions().size() == 1);
}

TEST_CASE("save then load mid-decision keeps the pending references") {
  Session s("s", read_fixture("running_example.sql"));
  s.add_operator(op(kRenameUid));
  s.decide(decision_request_from_json(next_decision(s.plan().tree_json(), "RenameReferenceInSelectClause")));
  REQUIRE(s.plan().pending() > 0);

  Session back = Session::from_json(json::parse(s.to_json().dump()));
  CHECK(back.id() == s.id());
  CHECK(back.created() == s.created());
  CHECK(back.plan().tree_json() == s.plan().tree_json());
  CHECK(pending_addresses(back.plan().tree_json()) == pending_addresses(s.plan().tree_json()));
}

TEST_CASE("a loaded session produces the same patch") {
  auto m = read_fixture("running_example.sql");
  Session s("s", m);
  s.add_operator(op(kRenameUid));
  for (int guard = 0; !s.plan().closed() && guard < 20; ++guard)
    s.decide(decision_request_from_json(next_decision(s.plan().tree_json(), "RenameReferenceInSelectClause")));
  REQUIRE(s.plan().closed());
  Session back = Session::from_json(s.to_json());
  CHECK(back.patch(false).patch.text() == s.patch(false).patch.text());
}

TEST_CASE("session files with another format or version are rejected") {
  Session s("s", read_fixture("running_example.sql"));
  json j = s.to_json();
  auto code_of = [](const json& file) {
    try {
      Session::from_json(file);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::SyntaxError;
  };
  json wrong_version = j;
  wrong_version["version"] = kSessionFormatVersion + 1;
  CHECK(code_of(wrong_version) == ErrorCode::CorruptSessionFile);
  json wrong_format = j;
  wrong_format["format"] = "something-else";
  CHECK(code_of(wrong_format) == ErrorCode::CorruptSessionFile);
  json truncated = j;
  truncated.erase("operators");
  CHECK(code_of(truncated) == ErrorCode::CorruptSessionFile);
  json bad_op = j;
  bad_op["operators"] = json::array({{{"op", "RenameColumn"}, {"target", "public.nobody.x"}}});
  CHECK(code_of(bad_op) == ErrorCode::CorruptSessionFile);
}

TEST_CASE("removing an operator drops the decisions it needed") {
  Session s("s", read_fixture("running_example.sql"));
  s.add_operator(op(kRenameUid));
  s.decide(decision_request_from_json(next_decision(s.plan().tree_json(), "RenameReferenceInSelectClause")));
  REQUIRE(s.decisions().size() == 1);
  s.remove_operator(0);
  CHECK(s.operators().empty());
  CHECK(s.decisions().empty());
  CHECK(s.plan().closed());
  CHECK_THROWS_AS(s.remove_operator(0), Error);
}

TEST_CASE("an operator that fails leaves the session unchanged") {
  Session s("s", read_fixture("running_example.sql"));
  s.add_operator(op(kRenameUid));
  auto before = s.plan().tree_json();
  CHECK_THROWS_AS(s.add_operator(op(R"({"op":"RemoveColumn","target":"public.person.nope"})")), Error);
  CHECK(s.operators().size() == 1);
  CHECK(s.plan().tree_json() == before);
}

TEST_CASE("moving independent views into a new schema has no impact") {
  Session s("s", web_views_fixture(23, 31));
  for (int v = 1; v <= 23; ++v) {
    s.add_operator(op(R"({"op":"MoveView","target":"public.web_view)" + std::to_string(v) +
                      R"(","args":{"namespace":"web"}})"));
  }
  CHECK(s.plan().roots.size() == 23);
  CHECK(s.plan().pending() == 0);
  CHECK(s.plan().refs.empty());
}

TEST_CASE("the store keeps sessions in the data directory") {
  TempDir dir;
  std::string id;
  {
    SessionStore store(dir.path);
    id = store.create(read_fixture("running_example.sql"));
    store.write(id, [](Session& s) { s.add_operator(op(kRenameUid)); });
    CHECK(std::filesystem::exists(dir.path / (id + ".json")));
  }
  { std::ofstream(dir.path / "broken.json") << "{\"format\":\"dbevo-session\",\"version\":99}"; }
  SessionStore again(dir.path);
  auto failed = again.load_all();
  REQUIRE(failed.size() == 1);
  CHECK(failed[0].find("broken.json") != std::string::npos);
  REQUIRE(again.ids() == std::vector<std::string>{id});
  CHECK(again.read(id, [](const Session& s) { return s.operators().size(); }) == 1);
  again.remove(id);
  CHECK_FALSE(std::filesystem::exists(dir.path / (id + ".json")));
  CHECK_THROWS_AS(again.read(id, [](const Session& s) { return s.id(); }), Error);
}

TEST_CASE("session ids are unique") {
  SessionStore store;
  std::set<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.insert(store.create("CREATE TABLE t (a int4);"));
  CHECK(ids.size() == 50);
}

TEST_CASE("http: the workflow from upload to patch") {
  TestServer srv;
  auto c = srv.client();
  auto id = create_session(c, read_fixture("running_example.sql"));

  auto tree = parse(c.Get("/sessions/" + id + "/tree"));
  CHECK(tree["roots"].empty());

  auto r = c.Post("/sessions/" + id + "/operators", kRenameUid, "application/json");
  REQUIRE(r);
  CHECK(r->status == 201);
  tree = json::parse(r->body);
  CHECK(tree["roots"].size() == 1);
  CHECK(tree["pending"] == 3);

  SUBCASE("recommendations carry the source of the actionable entity") {
    std::size_t idx = 0;
    for (const auto& ref : tree["references"])
      if (ref["subset"] == "column.viewSelect") idx = ref["index"];
    auto rec = parse(c.Get("/sessions/" + id + "/references/" + std::to_string(idx) + "/recommendations"));
    CHECK(rec["candidates"].size() == 2);
    CHECK(rec["source"]["highlighted"] == "uid");
  }

  SUBCASE("the patch is refused until every reference is decided") {
    auto p = c.Post("/sessions/" + id + "/patch", "{}", "application/json");
    REQUIRE(p);
    CHECK(p->status == 409);
    auto body = json::parse(p->body);
    CHECK(body["code"] == "PendingDecisions");
    CHECK(body["pending"].size() == 3);
  }

  SUBCASE("deciding everything yields the simulated patch") {
    for (int guard = 0; !pending_of(tree).empty() && guard < 20; ++guard) {
      auto d = c.Post("/sessions/" + id + "/decisions", next_decision(tree, "RenameReferenceInSelectClause").dump(),
                      "application/json");
      REQUIRE(d);
      REQUIRE(d->status == 200);
      tree = json::parse(d->body);
    }
    CHECK(tree["closed"] == true);
    auto p = parse(c.Post("/sessions/" + id + "/patch", json{{"commit", true}}.dump(), "application/json"));
    std::string sql = p["sql"];
    CHECK(sql.rfind("BEGIN;\n", 0) == 0);
    CHECK(sql.find("RENAME COLUMN \"uid\" TO \"login\"") != std::string::npos);
    CHECK(sql.substr(sql.size() - 8) == "COMMIT;\n");
    CHECK(p["report"]["ok"] == true);
    CHECK(p["report"]["statements"] == 8);
  }

  SUBCASE("an operator can be withdrawn") {
    auto d = c.Delete("/sessions/" + id + "/operators/0");
    REQUIRE(d);
    CHECK(d->status == 200);
    CHECK(json::parse(d->body)["roots"].empty());
  }
}

TEST_CASE("http: error statuses") {
  TestServer srv;
  auto c = srv.client();
  auto id = create_session(c, read_fixture("running_example.sql"));

  auto status_code = [](const httplib::Result& r, const std::string& code) {
    REQUIRE(r);
    auto body = json::parse(r->body);
    CHECK(body["code"] == code);
    CHECK(body.contains("message"));
    return r->status;
  };
  CHECK(status_code(c.Get("/sessions/nope/tree"), "UnknownSession") == 404);
  CHECK(status_code(c.Get("/sessions/" + id + "/references/4/recommendations"), "UnknownReference") == 404);
  CHECK(status_code(c.Delete("/sessions/" + id + "/operators/3"), "UnknownOperator") == 404);
  CHECK(status_code(c.Post("/sessions", json{{"dump", "CREATE TABLE (;"}}.dump(), "application/json"),
                    "ParseFailure") == 422);
  CHECK(status_code(c.Post("/sessions/" + id + "/operators", "{not json", "application/json"), "ParseFailure") == 422);
  CHECK(status_code(c.Post("/sessions/" + id + "/operators", R"({"op":"Frobnicate"})", "application/json"),
                    "InvalidOperator") == 422);
  CHECK(status_code(c.Post("/sessions/" + id + "/operators", R"({"op":"RemoveColumn","target":"public.person.nope"})",
                           "application/json"),
                    "UnknownEntity") == 422);

  // A repeated decision is refused and changes nothing.
  auto tree = json::parse(c.Post("/sessions/" + id + "/operators", kRenameUid, "application/json")->body);
  auto decision = next_decision(tree, "RenameReferenceInSelectClause");
  auto first = c.Post("/sessions/" + id + "/decisions", decision.dump(), "application/json");
  REQUIRE(first);
  REQUIRE(first->status == 200);
  auto second = c.Post("/sessions/" + id + "/decisions", decision.dump(), "application/json");
  CHECK(status_code(second, "AlreadyDecided") == 409);
  CHECK(parse(c.Get("/sessions/" + id + "/tree")) == json::parse(first->body));

  // Contradictory operators are refused as a conflict.
  auto contra = c.Post("/sessions/" + id + "/operators",
                       R"([{"op":"RenameTable","target":"public.person","args":{"new_name":"people"}},
                           {"op":"RemoveColumn","target":"public.person.lastname"}])",
                       "application/json");
  CHECK(status_code(contra, "ContradictoryOperators") == 409);
  CHECK(parse(c.Get("/sessions/" + id + "/tree"))["roots"].size() == 1);
}

TEST_CASE("http: each decision removes the decided reference from the pending set") {
  // Random decision orders over the extended fixture: the decided reference leaves the
  // pending set, references pending before stay pending otherwise, and the plan closes.
  TestServer srv;
  auto c = srv.client();
  std::mt19937 rng(20240611);
  for (int run = 0; run < 12; ++run) {
    auto id = create_session(c, read_fixture("staff_directory.sql"));
    auto ops = read_fixture("seven_operators.json");
    auto tree = json::parse(c.Post("/sessions/" + id + "/operators", ops, "application/json")->body);
    std::string trail;
    for (int guard = 0; !pending_of(tree).empty() && guard < 50; ++guard) {
      auto pending = pending_of(tree);
      const auto& ref = pending[rng() % pending.size()];
      const auto& cands = ref["candidates"];
      json d{{"reference", ref["address"]}, {"recommendation", rng() % cands.size()}};
      auto r = c.Post("/sessions/" + id + "/decisions", d.dump(), "application/json");
      REQUIRE(r);
      REQUIRE(r->status == 200);
      auto next = json::parse(r->body);
      // Spans of later roots move when an earlier decision rewrites their text, so
      // references are compared by what they are rather than where they sit.
      auto before = pending_identities(tree);
      auto after = pending_identities(next);
      auto decided = identity(ref);
      trail += " " + d.dump();
      INFO(trail);
      CHECK(after[decided] + 1 == before[decided]);
      std::size_t kept = 0;
      for (const auto& [key, n] : before) kept += std::min(n, after[key]);
      CHECK(kept == pending.size() - 1);
      tree = next;
    }
    CHECK(tree["closed"] == true);
    CHECK(parse(c.Post("/sessions/" + id + "/patch", "{}", "application/json"))["report"]["ok"] == true);
  }
}

TEST_CASE("http: concurrent decisions on one session are serialized") {
  TestServer srv;
  auto c0 = srv.client();
  auto r0 = c0.Post("/sessions", json{{"dump", read_fixture("staff_directory.sql")}, {"autoAcceptSingle", true}}.dump(),
                    "application/json");
  REQUIRE(r0);
  std::string id = json::parse(r0->body)["id"];
  auto tree = json::parse(c0.Post("/sessions/" + id + "/operators", read_fixture("seven_operators.json"),
                                  "application/json")
                              ->body);
  std::atomic<int> ok{0}, conflicts{0}, other{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < 8; ++t) {
    workers.emplace_back([&, t] {
      auto c = srv.client();
      for (int i = 0; i < 12; ++i) {
        auto current = json::parse(c.Get("/sessions/" + id + "/tree")->body);
        auto pending = pending_of(current);
        if (pending.empty()) return;
        const auto& ref = pending[static_cast<std::size_t>(t + i) % pending.size()];
        json d{{"reference", ref["address"]}, {"chosen", "RenameReferenceInSelectClause"}};
        auto r = c.Post("/sessions/" + id + "/decisions", d.dump(), "application/json");
        if (!r) {
          ++other;
        } else if (r->status == 200) {
          ++ok;
        } else if (r->status == 409) {
          ++conflicts;
        } else {
          ++other;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  CHECK(other == 0);
  auto final_tree = parse(c0.Get("/sessions/" + id + "/tree"));
  auto summary = parse(c0.Get("/sessions/" + id));
  CHECK(final_tree["closed"] == true);
  // Each accepted POST added exactly one entry to the log.
  CHECK(summary["decisions"].size() == static_cast<std::size_t>(ok.load()));
  CHECK(ok == 4);
  Session replay = Session::from_json(srv.store.read(id, [](const Session& s) { return s.to_json(); }));
  CHECK(replay.plan().tree_json() == final_tree);
}

TEST_CASE("http: moving 23 independent views gives 23 ALTER VIEW statements") {
  TestServer srv;
  auto c = srv.client();
  auto id = create_session(c, web_views_fixture(23, 31));
  json ops = json::array();
  for (int v = 1; v <= 23; ++v) {
    ops.push_back({{"op", "MoveView"}, {"target", "public.web_view" + std::to_string(v)}, {"args", {{"namespace", "web"}}}});
  }
  auto tree = json::parse(c.Post("/sessions/" + id + "/operators", ops.dump(), "application/json")->body);
  CHECK(tree["pending"] == 0);
  auto p = parse(c.Post("/sessions/" + id + "/patch", "{}", "application/json"));
  CHECK(p["report"]["ok"] == true);
  std::size_t alters = 0, others = 0;
  for (const auto& cmd : p["provenance"]) {
    std::string sql = cmd["sql"];
    if (sql.rfind("ALTER VIEW", 0) == 0 && sql.find("SET SCHEMA \"web\"") != std::string::npos) {
      ++alters;
    } else {
      ++others;
    }
  }
  CHECK(alters == 23);
  CHECK(others == 0);
}

TEST_CASE("http: sessions survive a restart of the service") {
  TempDir dir;
  std::string id;
  json tree;
  {
    TestServer srv(dir.path);
    auto c = srv.client();
    id = create_session(c, read_fixture("running_example.sql"));
    tree = json::parse(c.Post("/sessions/" + id + "/operators", kRenameUid, "application/json")->body);
    REQUIRE(c.Post("/sessions/" + id + "/decisions", next_decision(tree, "AliasInSelectClause").dump(),
                   "application/json"));
    tree = parse(c.Get("/sessions/" + id + "/tree"));
  }
  TestServer srv(dir.path);
  CHECK(srv.store.load_all().empty());
  auto c = srv.client();
  CHECK(parse(c.Get("/sessions/" + id + "/tree")) == tree);
}
