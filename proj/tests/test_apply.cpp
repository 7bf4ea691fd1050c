#include <doctest.h>

#include "dbevo/apply.hpp"
#include "dbevo/ddl.hpp"
#include "support.hpp"

using namespace dbevo;
using namespace dbevo::testing;

namespace {

ErrorCode code_of(const SchemaModel& m, const std::string& json) {
  try {
    apply_to_model(op(json), m);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("operator was accepted");
  return ErrorCode::SyntaxError;
}

}  // namespace

TEST_CASE("renaming a table updates checked referencers only") {
  auto m = fixture_model("running_example.sql");
  auto after = apply_to_model(op(R"({"op":"RenameTable","target":"public.person","args":{"new_name":"people"}})"), m);
  CHECK(after.find(EntityPath::parse("public.people")));
  CHECK_FALSE(after.find(EntityPath::parse("public.person")));
  CHECK(squash(text_of(after, "public.members_directory")) ==
        "SELECT people.id, people.lastname, people.uid FROM people WHERE ((people.uid)::text <> ''::text)");
  // the procedure body is left alone and now dangles
  CHECK(text_of(after, "public.id_for_uid") == text_of(m, "public.id_for_uid"));
  CHECK_FALSE(after.has_errors());
  bool dangling = false;
  for (const auto& r : after.references()) dangling |= !r.resolved && !r.checked;
  CHECK(dangling);
}

TEST_CASE("renaming a column keeps view output names") {
  auto m = fixture_model("running_example.sql");
  auto after = apply_to_model(op(R"({"op":"RenameColumn","target":"public.person.uid","args":{"new_name":"uuid"}})"), m);
  CHECK(squash(text_of(after, "public.members_directory")) ==
        "SELECT person.id, person.lastname, person.uuid AS uid FROM person WHERE ((person.uuid)::text <> ''::text)");
  CHECK(after.find(EntityPath::parse("public.members_directory.uid")));
  CHECK(text_of(after, "public.permanents_directory") == text_of(m, "public.permanents_directory"));
}

TEST_CASE("removal of referenced entities is refused") {
  auto m = fixture_model("running_example.sql");
  CHECK(code_of(m, R"({"op":"RemoveColumn","target":"public.person.uid"})") == ErrorCode::IllegalOnReferencedEntity);
  CHECK(code_of(m, R"({"op":"RemoveTable","target":"public.person"})") == ErrorCode::IllegalOnReferencedEntity);
  CHECK(code_of(m, R"({"op":"RemoveView","target":"public.members_directory"})") ==
        ErrorCode::IllegalOnReferencedEntity);
  // only a procedure depends on the column list position of id: still removable? no, views select it
  auto ok = apply_to_model(op(R"({"op":"RemoveView","target":"public.permanents_directory"})"), m);
  CHECK(ok.count(EntityKind::View) == 1);
}

TEST_CASE("removing a column also drops its not-null and default constraints") {
  auto m = load_schema("CREATE TABLE t (a int, b int NOT NULL DEFAULT 0);");
  auto after = apply_to_model(op(R"({"op":"RemoveColumn","target":"public.t.b"})"), m);
  CHECK(after.count(EntityKind::Constraint) == 0);
  CHECK(after.columns_of(id_of(after, "public.t")).size() == 1);
}

TEST_CASE("moves qualify references outside public") {
  auto m = load_schema(
      "CREATE SCHEMA archive;\n"
      "CREATE TABLE t (a int);\n"
      "CREATE VIEW v AS SELECT t.a FROM t;");
  auto after = apply_to_model(op(R"({"op":"MoveTable","target":"public.t","args":{"namespace":"archive"}})"), m);
  CHECK(squash(text_of(after, "public.v")) == "SELECT t.a FROM archive.t");
  CHECK(after.find(EntityPath::parse("archive.t.a")));
  CHECK(code_of(m, R"({"op":"MoveTable","target":"public.t","args":{"namespace":"nowhere"}})") ==
        ErrorCode::ContradictsModel);
}

TEST_CASE("triggers follow renamed tables, columns and functions") {
  auto m = load_schema(
      "CREATE TABLE t (a int, b int);\n"
      "CREATE FUNCTION trg_fn() RETURNS trigger AS $$ BEGIN RETURN NEW; END; $$ LANGUAGE plpgsql;\n"
      "CREATE TRIGGER trg BEFORE UPDATE OF a ON t FOR EACH ROW WHEN (NEW.a > 0) EXECUTE FUNCTION trg_fn();");
  auto s1 = apply_to_model(op(R"({"op":"RenameColumn","target":"public.t.a","args":{"new_name":"x"}})"), m);
  const TriggerDef& t1 = s1.catalog().triggers.at(0);
  CHECK(t1.update_columns == std::vector<std::string>{"x"});
  CHECK(squash(t1.when) == "NEW.x > 0");
  auto s2 = apply_to_model(op(R"j({"op":"RenameStoredProcedure","target":"public.trg_fn()","args":{"new_name":"g"}})j"), s1);
  CHECK(s2.catalog().triggers.at(0).function.name == "g");
  auto s3 = apply_to_model(op(R"({"op":"RenameTable","target":"public.t","args":{"new_name":"u"}})"), s2);
  CHECK(s3.catalog().triggers.at(0).table.name == "u");
  CHECK_FALSE(s3.has_errors());
}

TEST_CASE("check constraints follow column renames") {
  auto m = load_schema("CREATE TABLE t (a int, CONSTRAINT pos CHECK (a > 0));");
  auto after = apply_to_model(op(R"({"op":"RenameColumn","target":"public.t.a","args":{"new_name":"b"}})"), m);
  const auto& c = after.catalog().tables.at(0).constraints.at(0);
  CHECK(c.expression == "b > 0");
}

TEST_CASE("a view column rename adds an alias") {
  auto m = fixture_model("running_example.sql");
  auto after = apply_to_model(
      op(R"({"op":"RenameColumn","target":"public.permanents_directory.uid","args":{"new_name":"code"}})"), m);
  CHECK(after.find(EntityPath::parse("public.permanents_directory.code")));
  // referenced by another view: refused
  CHECK(code_of(m, R"({"op":"RenameColumn","target":"public.members_directory.uid","args":{"new_name":"code"}})") ==
        ErrorCode::IllegalOnReferencedEntity);
}

TEST_CASE("reference operators splice the written text") {
  auto m = fixture_model("running_example.sql");
  auto refs = dependents_of(m, EntityPath::parse("public.person.uid"), false);
  const Reference* proc_ref = nullptr;
  for (auto id : refs)
    if (!m.reference(id).checked) proc_ref = &m.reference(id);
  REQUIRE(proc_ref);
  Operator o;
  o.kind = OpKind::RenameReferenceInStoredProcedure;
  o.ref = address_of(m, *proc_ref);
  o.args = {{"replacement", "uuid"}};
  auto after = analyze(apply_operator(m, o));
  CHECK(text_of(after, "public.id_for_uid").find("uidperson = uuid;") != std::string::npos);
}

TEST_CASE("adding objects from SQL") {
  auto m = fixture_model("running_example.sql");
  auto s1 = apply_to_model(
      op(R"({"op":"AddColumn","target":"public.person","args":{"name":"email","type":"text","constraints":"NOT NULL"}})"),
      m);
  CHECK(s1.find(EntityPath::parse("public.person.email")));
  CHECK(s1.count(EntityKind::Constraint) == 2);
  auto s2 = apply_to_model(
      op(R"({"op":"AddView","args":{"sql":"CREATE VIEW emails AS SELECT email FROM person"}})"), s1);
  CHECK(s2.count(EntityKind::View) == 3);
  CHECK(code_of(s2, R"({"op":"AddView","args":{"sql":"CREATE VIEW emails AS SELECT 1"}})") ==
        ErrorCode::ContradictsModel);
  CHECK(code_of(s2, R"({"op":"HumanDecision","target":"public.person"})") == ErrorCode::NoSqlForm);
}
