#include <doctest.h>

#include <algorithm>

#include "dbevo/ddl.hpp"
#include "dbevo/utf8.hpp"
#include "support.hpp"

using namespace dbevo;
using namespace dbevo::testing;

namespace {

std::vector<std::string> owner_paths(const SchemaModel& m, const std::vector<std::size_t>& refs) {
  std::vector<std::string> out;
  for (auto id : refs) out.push_back(m.entity(m.reference(id).owner).path.str());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("running example entities") {
  auto m = fixture_model("running_example.sql");
  CHECK_FALSE(m.has_errors());
  CHECK(m.count(EntityKind::Table) == 1);
  CHECK(m.count(EntityKind::View) == 2);
  CHECK(m.count(EntityKind::StoredProcedure) == 1);
  CHECK(m.columns_of(id_of(m, "public.members_directory")).size() == 3);
  CHECK(m.find(EntityPath::parse("public.id_for_uid(varchar).uidperson")));
  CHECK(m.find(EntityPath::parse("public.id_for_uid.idperson")));
  CHECK(m.find(EntityPath::parse("public.members_directory.\"$query\".\"$where1\"")));
  CHECK(m.find(EntityPath::parse("public.id_for_uid.\"$query1\".\"$into1\"")));
  CHECK_THROWS_AS(m.resolve(EntityPath::parse("public.nobody")), Error);
}

TEST_CASE("person.uid has one dependent per clause") {
  auto m = fixture_model("running_example.sql");
  auto refs = dependents_of(m, EntityPath::parse("public.person.uid"), false);
  CHECK(owner_paths(m, refs) == std::vector<std::string>{
                                    "public.id_for_uid(varchar).\"$query1\".\"$where1\"",
                                    "public.members_directory.\"$query\".\"$select1\"",
                                    "public.members_directory.\"$query\".\"$where1\"",
                                });
  for (auto id : refs) {
    const Reference& r = m.reference(id);
    CHECK(utf8::substr(m.entity(r.root).source_text, r.span) == "uid");
    CHECK(r.checked == (m.entity(r.root).kind == EntityKind::View));
  }
}

TEST_CASE("qualifiers through unaliased sources are marked") {
  auto m = fixture_model("running_example.sql");
  auto refs = dependents_of(m, EntityPath::parse("public.person"), false);
  std::size_t via = 0, direct = 0;
  for (auto id : refs) (m.reference(id).via_source ? via : direct)++;
  // person.id, person.lastname, person.uid, (person.uid) in views; FROM person twice
  CHECK(via == 4);
  CHECK(direct == 2);
}

TEST_CASE("dependency graph of the running example") {
  auto m = fixture_model("running_example.sql");
  auto g = dependency_graph(m);
  CHECK_FALSE(g.cycle);
  auto j = nlohmann::json::parse(g.to_json());
  std::vector<std::tuple<std::string, std::string, int>> edges;
  for (const auto& e : j["edges"]) edges.emplace_back(e["from"], e["to"], e["refCount"]);
  std::sort(edges.begin(), edges.end());
  CHECK(edges == std::vector<std::tuple<std::string, std::string, int>>{
                     {"public.id_for_uid(varchar)", "public.person", 3},
                     {"public.members_directory", "public.person", 9},
                     {"public.permanents_directory", "public.members_directory", 7},
                 });
}

TEST_CASE("entity source exposes reference spans") {
  auto m = fixture_model("running_example.sql");
  auto src = entity_source(m, EntityPath::parse("public.permanents_directory"));
  CHECK(src.references.size() == 7);
  for (const auto& [id, span] : src.references) {
    CHECK(utf8::substr(src.text, span) == utf8::substr(src.text, m.reference(id).span));
  }
  try {
    entity_source(m, EntityPath::parse("public.person.uid"));
    FAIL("expected NotSourceBearing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotSourceBearing);
  }
}

TEST_CASE("unresolved names are errors in checked code and warnings in procedures") {
  auto m = analyze(parse_dump(
      "CREATE TABLE t (a int);\n"
      "CREATE VIEW v AS SELECT t.b FROM t;\n"
      "CREATE FUNCTION f() RETURNS int AS $$ BEGIN RETURN (SELECT zz FROM t); END; $$ LANGUAGE plpgsql;"));
  int errors = 0, warnings = 0;
  for (const auto& d : m.diagnostics()) (d.severity == Diagnostic::Severity::Error ? errors : warnings)++;
  CHECK(errors == 1);
  CHECK(warnings == 1);
  CHECK_THROWS_AS(load_schema("CREATE TABLE t (a int);\nCREATE VIEW v AS SELECT b FROM t;"), Error);
}

TEST_CASE("mutual foreign keys do not form a cycle") {
  auto m = load_schema(
      "CREATE TABLE a (id int PRIMARY KEY, b int);\n"
      "CREATE TABLE b (id int PRIMARY KEY, a int REFERENCES a(id));\n"
      "ALTER TABLE a ADD CONSTRAINT a_b_fkey FOREIGN KEY (b) REFERENCES b(id);");
  auto g = dependency_graph(m);
  CHECK_FALSE(g.cycle);
  CHECK(m.is_fk_node(id_of(m, "public.a.a_b_fkey")));
  CHECK(nlohmann::json::parse(g.to_json())["nodes"].size() == 4);
}
