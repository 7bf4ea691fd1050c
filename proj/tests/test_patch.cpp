#include <doctest.h>

#include <algorithm>
#include <set>

#include "dbevo/patch.hpp"
#include "support.hpp"

using namespace dbevo;
using namespace dbevo::testing;

namespace {

const char* kRenameUid = R"({"op":"RenameColumn","target":"public.person.uid","args":{"new_name":"login"}})";

std::vector<std::string> statements_of(const SqlPatch& patch) {
  std::vector<std::string> out;
  for (const auto& c : patch.commands) out.push_back(squash(c.sql));
  return out;
}

std::size_t count_prefix(const SqlPatch& patch, const std::string& prefix) {
  return static_cast<std::size_t>(std::count_if(patch.commands.begin(), patch.commands.end(),
                                                [&](const SqlCommand& c) { return c.sql.starts_with(prefix); }));
}

}  // namespace

TEST_CASE("the running example yields the six statements of the published patch") {
  auto m = fixture_model("running_example.sql");
  auto p = decide_all(m, {op(kRenameUid)}, OpKind::RenameReferenceInSelectClause);
  REQUIRE(p.closed());
  auto patch = build_patch(p);
  // The published listing elides the WHERE literal; the fixture spells it out.
  const std::string expected = R"(BEGIN;
DROP VIEW "permanents_directory" RESTRICT;
DROP VIEW "members_directory" RESTRICT;

CREATE OR REPLACE FUNCTION
  "id_for_uid"(uidperson varchar)
  RETURNS int4 AS $$
DECLARE
  idperson int4;
BEGIN
  SELECT id INTO idperson
  FROM
    person
  WHERE
    uidperson = login;
  RETURN idperson;
END;$$ LANGUAGE plpgsql;

ALTER TABLE "person"
  RENAME COLUMN "uid" TO "login";

CREATE VIEW "members_directory" AS
  SELECT
    person.id,
    person.lastname,
    person.login
  FROM person
  WHERE ((person.login)::text <> ''::text);

CREATE VIEW "permanents_directory" AS
  SELECT
    members_directory.id,
    members_directory.lastname,
    members_directory.login
  FROM members_directory;
ROLLBACK;
)";
  CHECK(squash(patch.text()) == squash(expected));

  auto rep = simulate_plan_patch(p, patch);
  CHECK(rep.violations.empty());
  CHECK(rep.matches_expected);
  CHECK(rep.statements == 8);

  // every operator that does something shows up in the provenance of a command
  std::set<int> covered;
  for (const auto& c : patch.commands) covered.insert(c.operators.begin(), c.operators.end());
  for (const auto& n : p.nodes) {
    if (n.op.kind != OpKind::DoNothing) CHECK(covered.contains(n.op.id));
  }
}

TEST_CASE("the alias branch only replaces the inner view") {
  auto m = fixture_model("running_example.sql");
  auto first = derive_plan(m, {op(kRenameUid)}, {});
  auto p = derive_plan(m, {op(kRenameUid)}, {{first.refs[0].address, OpKind::AliasInSelectClause, std::nullopt}}, {},
                       PlanOptions{true});
  REQUIRE(p.closed());
  auto patch = build_patch(p);
  auto text = patch.text();
  CHECK(text.find("person.login AS uid") != std::string::npos);
  CHECK(text.find("permanents_directory") == std::string::npos);
  CHECK(count_prefix(patch, "DROP") == 0);
  auto rep = simulate_plan_patch(p, patch);
  CHECK(rep.ok());
}

TEST_CASE("an empty plan gives an empty transaction") {
  auto m = fixture_model("running_example.sql");
  auto p = derive_plan(m, {}, {});
  auto patch = build_patch(p);
  CHECK(patch.text() == "BEGIN;\nROLLBACK;\n");
  patch.commit = true;
  CHECK(patch.text() == "BEGIN;\nCOMMIT;\n");
  auto rep = simulate_patch(patch.text(), m, {&m, {}});
  CHECK(rep.ok());
  CHECK(canonical_dump(rep.final_model.catalog()) == canonical_dump(m.catalog()));
}

TEST_CASE("simulation flags drops in the wrong order") {
  auto m = fixture_model("running_example.sql");
  auto p = decide_all(m, {op(kRenameUid)}, OpKind::RenameReferenceInSelectClause);
  auto patch = build_patch(p);
  std::swap(patch.commands[0], patch.commands[1]);
  auto rep = simulate_patch(patch.text(), m);
  REQUIRE_FALSE(rep.violations.empty());
  CHECK(rep.violations.front().statement == 2);
  CHECK(rep.violations.front().code == ErrorCode::IllegalOnReferencedEntity);
}

TEST_CASE("patches are deterministic") {
  auto m = fixture_model("running_example.sql");
  auto a = build_patch(decide_all(m, {op(kRenameUid)}, OpKind::RenameReferenceInSelectClause));
  auto b = build_patch(decide_all(m, {op(kRenameUid)}, OpKind::RenameReferenceInSelectClause));
  CHECK(a.text() == b.text());
}

TEST_CASE("open plans and human decisions block the patch") {
  auto m = fixture_model("running_example.sql");
  auto open = derive_plan(m, {op(kRenameUid)}, {});
  CHECK_THROWS_WITH_AS(build_patch(open), doctest::Contains("await"), Error);

  auto root = op(R"j({"op":"RemoveColumn","target":"public.person.uid"})j");
  auto p = decide_all(m, {root}, OpKind::HumanDecision);
  REQUIRE(p.closed());
  try {
    build_patch(p);
    FAIL("expected UnresolvedHumanDecision");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnresolvedHumanDecision);
  }
}

TEST_CASE("a waived decision on a procedure leaves a tolerated dangling reference") {
  auto m = fixture_model("running_example.sql");
  auto root = op(R"j({"op":"RemoveColumn","target":"public.person.uid"})j");
  std::vector<Decision> log;
  auto first = derive_plan(m, {root}, {});
  for (const auto& r : first.refs) {
    log.push_back({r.address, r.label == "column.procClauses" ? OpKind::HumanDecision : OpKind::RemoveView, std::nullopt});
  }
  std::vector<Waiver> waivers{{"public.id_for_uid(varchar)", "rewritten by the application team"}};
  Plan p = derive_plan(m, {root}, log, waivers);
  for (int guard = 0; !p.closed() && guard < 20; ++guard) {
    for (const auto& r : p.refs) {
      if (r.status == RefStatus::Pending) {
        log.push_back({r.address, OpKind::RemoveView, std::nullopt});
        break;
      }
    }
    p = derive_plan(m, {root}, log, waivers);
  }
  REQUIRE(p.closed());
  CHECK(p.unresolved_human_decisions().empty());
  auto patch = build_patch(p);
  CHECK(count_prefix(patch, "DROP VIEW") == 2);
  CHECK(patch.text().find("DROP COLUMN \"uid\"") != std::string::npos);
  auto rep = simulate_plan_patch(p, patch);
  CHECK(rep.violations.empty());
  CHECK(rep.warnings.size() == 1);
  CHECK(rep.matches_expected);
}

TEST_CASE("replacing a human decision with a body rewrite") {
  auto m = fixture_model("running_example.sql");
  auto root = op(R"j({"op":"RemoveColumn","target":"public.person.uid"})j");
  auto first = derive_plan(m, {root}, {});
  std::vector<Decision> log;
  for (const auto& r : first.refs) {
    if (r.label == "column.procClauses") {
      Decision d{r.address, OpKind::HumanDecision,
                 op(R"j({"op":"ModifyBody","target":"public.id_for_uid(varchar)","args":{"body":"\nBEGIN\n  RETURN NULL;\nEND;"}})j")};
      log.push_back(d);
    }
  }
  auto p = decide_all(m, {root}, OpKind::RemoveView, log);
  REQUIRE(p.closed());
  auto patch = build_patch(p);
  auto stmts = statements_of(patch);
  REQUIRE(stmts.size() == 4);
  CHECK(stmts[0] == "DROP VIEW \"permanents_directory\" RESTRICT;");
  CHECK(stmts[1] == "DROP VIEW \"members_directory\" RESTRICT;");
  CHECK(stmts[2] == "ALTER TABLE \"person\" DROP COLUMN \"uid\" RESTRICT;");
  CHECK(stmts[3].starts_with("CREATE OR REPLACE FUNCTION"));
  CHECK(simulate_plan_patch(p, patch).ok());
}

TEST_CASE("moving a trigger procedure and its helpers qualifies the calls") {
  auto m = fixture_model("phd.sql");
  std::vector<Operator> ops{
      op(R"j({"op":"MoveStoredProcedure","target":"public.supervised_count(int4)","args":{"namespace":"phd"}})j"),
      op(R"j({"op":"MoveStoredProcedure","target":"public.supervisor_limit()","args":{"namespace":"phd"}})j"),
      op(R"j({"op":"MoveStoredProcedure","target":"public.thesis_guard()","args":{"namespace":"phd"}})j")};
  auto p = derive_plan(m, ops, {});
  std::vector<std::string> replacements;
  for (const auto& r : p.refs) {
    if (r.label != "procedure.unchecked") continue;
    REQUIRE(r.candidates.size() == 1);
    CHECK(r.actionable == "public.thesis_guard()");
    replacements.push_back(r.candidates[0].candidate.arg("replacement"));
  }
  CHECK(replacements == std::vector<std::string>{"phd.supervised_count", "phd.supervisor_limit"});

  auto closed = derive_plan(m, ops, {}, {}, PlanOptions{true});
  REQUIRE(closed.closed());
  auto patch = build_patch(closed);
  CHECK(patch.text().find("IF phd.supervised_count(NEW.supervisor) >= phd.supervisor_limit() THEN") != std::string::npos);
  CHECK(count_prefix(patch, "ALTER FUNCTION") == 3);
  CHECK(simulate_plan_patch(closed, patch).ok());
}

TEST_CASE("names follow earlier renames and moves of the same entity") {
  auto m = fixture_model("phd.sql");
  std::vector<Operator> ops{
      op(R"j({"op":"RenameStoredProcedure","target":"public.supervisor_limit()","args":{"new_name":"max_theses"}})j"),
      op(R"j({"op":"MoveStoredProcedure","target":"public.max_theses()","args":{"namespace":"phd"}})j")};
  auto p = derive_plan(m, ops, {}, {}, PlanOptions{true});
  REQUIRE(p.closed());
  auto stmts = statements_of(build_patch(p));
  auto rename = std::find(stmts.begin(), stmts.end(), "ALTER FUNCTION \"supervisor_limit\"() RENAME TO \"max_theses\";");
  auto move = std::find(stmts.begin(), stmts.end(), "ALTER FUNCTION \"max_theses\"() SET SCHEMA \"phd\";");
  CHECK(rename != stmts.end());
  CHECK(move != stmts.end());
  CHECK(rename < move);
  CHECK(simulate_plan_patch(p, build_patch(p)).ok());
}

TEST_CASE("retyping below a chain of views recreates the whole chain") {
  auto m = load_schema(R"(
CREATE TABLE t (a int4, b int4);
CREATE VIEW v1 AS SELECT t.a, t.b FROM t;
CREATE VIEW v2 AS SELECT v1.a FROM v1;
CREATE VIEW v3 AS SELECT v2.a FROM v2;
)");
  auto root = op(R"j({"op":"RetypeColumn","target":"public.t.a","args":{"type":"int8"}})j");
  auto p = decide_all(m, {root}, OpKind::DoNothing);
  REQUIRE(p.closed());
  auto patch = build_patch(p);
  auto stmts = statements_of(patch);
  REQUIRE(stmts.size() == 7);
  CHECK(stmts[0] == "DROP VIEW \"v3\" RESTRICT;");
  CHECK(stmts[1] == "DROP VIEW \"v2\" RESTRICT;");
  CHECK(stmts[2] == "DROP VIEW \"v1\" RESTRICT;");
  CHECK(stmts[3] == "ALTER TABLE \"t\" ALTER COLUMN \"a\" TYPE int8;");
  CHECK(stmts[4].starts_with("CREATE VIEW \"v1\""));
  CHECK(stmts[5].starts_with("CREATE VIEW \"v2\""));
  CHECK(stmts[6].starts_with("CREATE VIEW \"v3\""));
  std::size_t identities = 0;
  for (const auto& n : p.nodes) identities += n.op.kind == OpKind::Identity;
  CHECK(identities == 3);  // a DoNothing decision does not rebuild v1 by itself
  CHECK(simulate_plan_patch(p, patch).ok());
}

TEST_CASE("a removal cancels an earlier body change of the same view") {
  auto m = fixture_model("running_example.sql");
  std::vector<Operator> ops{
      op(R"j({"op":"ModifyViewBody","target":"public.permanents_directory","args":{"query":"SELECT members_directory.id FROM members_directory"}})j"),
      op(R"j({"op":"RemoveView","target":"public.permanents_directory"})j")};
  auto p = derive_plan(m, ops, {});
  REQUIRE(p.closed());
  auto patch = build_patch(p);
  REQUIRE(patch.commands.size() == 1);
  CHECK(patch.commands[0].sql == "DROP VIEW \"permanents_directory\" RESTRICT;");
  CHECK(patch.commands[0].operators == std::vector<int>{0, 1});
}

TEST_CASE("renaming a parameter recreates the procedure") {
  auto m = fixture_model("running_example.sql");
  auto root = op(R"j({"op":"RenameParameter","target":"public.id_for_uid(varchar).uidperson","args":{"new_name":"login"}})j");
  auto p = derive_plan(m, {root}, {}, {}, PlanOptions{true});
  REQUIRE(p.closed());
  auto stmts = statements_of(build_patch(p));
  REQUIRE(stmts.size() == 2);
  CHECK(stmts[0] == "DROP FUNCTION \"id_for_uid\"(varchar) RESTRICT;");
  CHECK(stmts[1].find("\"id_for_uid\"(login varchar)") != std::string::npos);
  CHECK(stmts[1].find("login = uid;") != std::string::npos);
  CHECK(simulate_plan_patch(p, build_patch(p)).ok());
}

TEST_CASE("tables, columns and constraints are added, moved and dropped") {
  auto m = load_schema(R"(
CREATE SCHEMA archive;
CREATE TABLE a (id int4 PRIMARY KEY, x int4, old int4);
CREATE TABLE b (id int4, a_id int4 REFERENCES a (id), note varchar);
)");
  std::vector<Operator> ops{
      op(R"j({"op":"AddTable","args":{"sql":"CREATE TABLE c (id int4, b_id int4, CONSTRAINT c_b FOREIGN KEY (b_id) REFERENCES b (id))"}})j"),
      op(R"j({"op":"AddConstraint","target":"public.b","args":{"definition":"PRIMARY KEY (id)"}})j"),
      op(R"j({"op":"AddColumn","target":"public.a","args":{"definition":"y int4 NOT NULL DEFAULT 0"}})j"),
      op(R"j({"op":"RemoveColumn","target":"public.a.old"})j"),
      op(R"j({"op":"RenameColumn","target":"public.b.note","args":{"new_name":"remark"}})j"),
      op(R"j({"op":"MoveTable","target":"public.b","args":{"namespace":"archive"}})j"),
      op(R"j({"op":"AddConstraint","target":"public.a","args":{"definition":"CHECK (x > 0)","name":"a_x_positive"}})j")};
  // AddTable must follow the move of b; put it last
  std::rotate(ops.begin(), ops.begin() + 1, ops.end());
  ops.back() = op(R"j({"op":"AddTable","args":{"sql":"CREATE TABLE c (id int4, b_id int4, CONSTRAINT c_b FOREIGN KEY (b_id) REFERENCES archive.b (id))"}})j");
  auto p = derive_plan(m, ops, {}, {}, PlanOptions{true});
  REQUIRE(p.closed());
  auto patch = build_patch(p);
  auto text = patch.text();
  CHECK(text.find("ADD COLUMN \"y\" int4 NOT NULL DEFAULT 0") != std::string::npos);
  CHECK(text.find("DROP COLUMN \"old\" RESTRICT") != std::string::npos);
  CHECK(text.find("ALTER TABLE \"b\"\n  SET SCHEMA \"archive\";") != std::string::npos);
  CHECK(text.find("ALTER TABLE \"archive\".\"b\"\n  RENAME COLUMN \"note\" TO \"remark\";") != std::string::npos);
  CHECK(text.find("ADD CONSTRAINT \"c_b\" FOREIGN KEY") != std::string::npos);
  auto rep = simulate_plan_patch(p, patch);
  CHECK(rep.violations.empty());
  CHECK(rep.matches_expected);
}
