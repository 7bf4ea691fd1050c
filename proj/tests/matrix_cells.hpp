#pragma once

// Conformance cells of operators against referencing entities. Each cell pairs a changed
// entity with a single referencer; check_cell reports how a cell departs from the
// expected RDBMS behaviour.

#include <string>
#include <vector>

#include "dbevo/apply.hpp"
#include "dbevo/patch.hpp"
#include "support.hpp"

namespace dbevo::testing::matrix {

enum class Changed { Table, Column, View, ViewColumn, Procedure };
enum class Referencer { Table, View, Procedure, Trigger };
enum class Action { Rename, Remove, Move };
enum class Expect { Auto, No, Unchecked };

struct Cell {
  Changed changed;
  Action action;
  Referencer referencer;
  Expect expect;
};

inline const char* name(Changed c) {
  switch (c) {
    case Changed::Table: return "table";
    case Changed::Column: return "table column";
    case Changed::View: return "view";
    case Changed::ViewColumn: return "view column";
    case Changed::Procedure: return "procedure";
  }
  return "";
}
inline const char* name(Referencer r) {
  switch (r) {
    case Referencer::Table: return "table";
    case Referencer::View: return "view";
    case Referencer::Procedure: return "procedure";
    case Referencer::Trigger: return "trigger";
  }
  return "";
}
inline const char* name(Action a) {
  switch (a) {
    case Action::Rename: return "rename";
    case Action::Remove: return "remove";
    case Action::Move: return "move";
  }
  return "";
}

inline const std::string kPlpgsql = " LANGUAGE plpgsql;\n";

inline std::string schema_for(const Cell& c) {
  // the key exists only for the foreign key, so that t itself holds no reference to a otherwise
  std::string s = c.referencer == Referencer::Table ? "CREATE SCHEMA s;\nCREATE TABLE t (a integer PRIMARY KEY, b integer);\n"
                                                    : "CREATE SCHEMA s;\nCREATE TABLE t (a integer, b integer);\n";
  if (c.changed == Changed::View || c.changed == Changed::ViewColumn) s += "CREATE VIEW w AS SELECT t.a, t.b FROM t;\n";
  const bool relation = c.changed != Changed::Procedure;
  const std::string rel = (c.changed == Changed::View || c.changed == Changed::ViewColumn) ? "w" : "t";
  if (c.changed == Changed::Procedure) {
    if (c.referencer == Referencer::Trigger) {
      s += "CREATE FUNCTION g() RETURNS trigger AS $$ BEGIN RETURN NEW; END; $$" + kPlpgsql;
    } else {
      s += "CREATE FUNCTION g(x integer) RETURNS integer AS $$ BEGIN RETURN x + 1; END; $$" + kPlpgsql;
    }
  }
  switch (c.referencer) {
    case Referencer::Table:
      s += "CREATE TABLE r (x integer REFERENCES t (a));\n";
      break;
    case Referencer::View:
      s += relation ? "CREATE VIEW v AS SELECT " + rel + ".a FROM " + rel + ";\n" : "CREATE VIEW v AS SELECT g(1) AS y;\n";
      break;
    case Referencer::Procedure:
      s += relation ? "CREATE FUNCTION f() RETURNS integer AS $$ DECLARE k integer; BEGIN SELECT " + rel + ".a INTO k FROM " +
                          rel + "; RETURN k; END; $$" + kPlpgsql
                    : "CREATE FUNCTION f() RETURNS integer AS $$ BEGIN RETURN g(1); END; $$" + kPlpgsql;
      break;
    case Referencer::Trigger:
      if (c.changed == Changed::Procedure) {
        s += "CREATE TRIGGER trg BEFORE UPDATE ON t FOR EACH ROW EXECUTE FUNCTION g();\n";
      } else {
        s += "CREATE FUNCTION tf() RETURNS trigger AS $$ BEGIN RETURN NEW; END; $$" + kPlpgsql;
        s += c.changed == Changed::Column ? "CREATE TRIGGER trg BEFORE UPDATE OF a ON t FOR EACH ROW EXECUTE FUNCTION tf();\n"
                                          : "CREATE TRIGGER trg BEFORE UPDATE ON t FOR EACH ROW EXECUTE FUNCTION tf();\n";
      }
      break;
  }
  return s;
}

inline std::string target_of(const Cell& c) {
  switch (c.changed) {
    case Changed::Table: return "public.t";
    case Changed::Column: return "public.t.a";
    case Changed::View: return "public.w";
    case Changed::ViewColumn: return "public.w.a";
    case Changed::Procedure: return c.referencer == Referencer::Trigger ? "public.g()" : "public.g(int4)";
  }
  return "";
}

// Path prefix the changed entity has after the operator.
inline std::string new_path_of(const Cell& c) {
  const bool trig = c.referencer == Referencer::Trigger;
  if (c.action == Action::Move) {
    switch (c.changed) {
      case Changed::Table: return "s.t";
      case Changed::View: return "s.w";
      default: return trig ? "s.g()" : "s.g(int4)";
    }
  }
  switch (c.changed) {
    case Changed::Table: return "public.n";
    case Changed::Column: return "public.t.n";
    case Changed::View: return "public.n";
    case Changed::ViewColumn: return "public.w.n";
    case Changed::Procedure: return trig ? "public.n()" : "public.n(int4)";
  }
  return "";
}

inline Operator operator_of(const Cell& c) {
  static const char* kinds[5][3] = {{"RenameTable", "RemoveTable", "MoveTable"},
                                    {"RenameColumn", "RemoveColumn", ""},
                                    {"RenameView", "RemoveView", "MoveView"},
                                    {"RenameColumn", "RemoveColumn", ""},
                                    {"RenameStoredProcedure", "RemoveStoredProcedure", "MoveStoredProcedure"}};
  nlohmann::json j{{"op", kinds[static_cast<int>(c.changed)][static_cast<int>(c.action)]}, {"target", target_of(c)}};
  if (c.action == Action::Rename) j["args"] = {{"new_name", "n"}};
  if (c.action == Action::Move) j["args"] = {{"namespace", "s"}};
  return operator_from_json(j);
}

// Source-bearing entity that holds the reference, or the table whose constraint does.
inline bool held_by(const SchemaModel& m, EntityId root, Referencer r) {
  const Entity& e = m.entity(root);
  std::string p = e.path.str();
  switch (r) {
    case Referencer::Table: return p.rfind("public.r", 0) == 0;
    case Referencer::View: return p == "public.v";
    case Referencer::Procedure: return p.rfind("public.f(", 0) == 0;
    case Referencer::Trigger: return e.kind == EntityKind::Trigger;
  }
  return false;
}

inline std::vector<const Reference*> refs_from(const SchemaModel& m, Referencer r) {
  std::vector<const Reference*> out;
  for (const auto& ref : m.references())
    if (held_by(m, ref.root, r)) out.push_back(&ref);
  return out;
}

inline std::string source_of(const SchemaModel& m, Referencer r) {
  std::string out;
  for (std::size_t i = 0; i < m.entities().size(); ++i)
    if (held_by(m, static_cast<EntityId>(i), r)) out += m.entity(static_cast<EntityId>(i)).source_text + "\n";
  return out;
}

inline std::vector<Decision> decision_log_of(const Plan& p) {
  std::vector<Decision> log;
  for (const auto& r : p.refs)
    if (r.status == RefStatus::Decided) log.push_back({r.address, p.nodes[r.chosen_op].op.kind, std::nullopt});
  return log;
}

// Resolution that keeps the referencer alive where one exists.
inline OpKind preferred(const Cell& c) {
  if (c.expect == Expect::Unchecked) {
    return c.action == Action::Remove ? OpKind::RemoveStoredProcedure : OpKind::RenameReferenceInStoredProcedure;
  }
  if (c.expect == Expect::Auto) return OpKind::DoNothing;
  switch (c.referencer) {
    case Referencer::Table: return OpKind::RemoveConstraint;
    case Referencer::View: return c.changed == Changed::ViewColumn && c.action == Action::Rename
                                      ? OpKind::AliasInSelectClause
                                      : OpKind::RemoveView;
    case Referencer::Trigger: return OpKind::RemoveTrigger;
    default: return OpKind::HumanDecision;
  }
}

inline const std::vector<Cell>& cells() {
  using C = Changed;
  using A = Action;
  using R = Referencer;
  using E = Expect;
  static const std::vector<Cell> all = {
      {C::Table, A::Rename, R::Table, E::Auto},          {C::Table, A::Rename, R::View, E::Auto},
      {C::Table, A::Rename, R::Procedure, E::Unchecked}, {C::Table, A::Rename, R::Trigger, E::Auto},
      {C::Table, A::Remove, R::Table, E::No},            {C::Table, A::Remove, R::View, E::No},
      {C::Table, A::Remove, R::Procedure, E::Unchecked}, {C::Table, A::Remove, R::Trigger, E::No},
      {C::Table, A::Move, R::Table, E::Auto},            {C::Table, A::Move, R::View, E::Auto},
      {C::Table, A::Move, R::Procedure, E::Unchecked},   {C::Table, A::Move, R::Trigger, E::Auto},

      {C::Column, A::Rename, R::Table, E::Auto},          {C::Column, A::Rename, R::View, E::Auto},
      {C::Column, A::Rename, R::Procedure, E::Unchecked}, {C::Column, A::Rename, R::Trigger, E::Auto},
      {C::Column, A::Remove, R::Table, E::No},            {C::Column, A::Remove, R::View, E::No},
      {C::Column, A::Remove, R::Procedure, E::Unchecked}, {C::Column, A::Remove, R::Trigger, E::No},

      {C::View, A::Rename, R::View, E::Auto}, {C::View, A::Rename, R::Procedure, E::Unchecked},
      {C::View, A::Remove, R::View, E::No},   {C::View, A::Remove, R::Procedure, E::Unchecked},
      {C::View, A::Move, R::View, E::Auto},   {C::View, A::Move, R::Procedure, E::Unchecked},

      {C::ViewColumn, A::Rename, R::View, E::No}, {C::ViewColumn, A::Rename, R::Procedure, E::Unchecked},
      {C::ViewColumn, A::Remove, R::View, E::No}, {C::ViewColumn, A::Remove, R::Procedure, E::Unchecked},

      {C::Procedure, A::Rename, R::View, E::Auto}, {C::Procedure, A::Rename, R::Procedure, E::Unchecked},
      {C::Procedure, A::Rename, R::Trigger, E::Auto},
      {C::Procedure, A::Remove, R::View, E::No},   {C::Procedure, A::Remove, R::Procedure, E::Unchecked},
      {C::Procedure, A::Remove, R::Trigger, E::No},
      {C::Procedure, A::Move, R::View, E::Auto},   {C::Procedure, A::Move, R::Procedure, E::Unchecked},
      {C::Procedure, A::Move, R::Trigger, E::Auto},
  };
  return all;
}

// Failures of one cell, empty when the cell conforms.
inline std::vector<std::string> check_cell(const Cell& c) {
  std::vector<std::string> fail;
  auto expect = [&fail](bool ok, const std::string& what) {
    if (!ok) fail.push_back(what);
    return ok;
  };
  SchemaModel m = load_schema(schema_for(c));
  if (!expect(!m.has_errors(), "fixture does not analyze") ||
      !expect(!refs_from(m, c.referencer).empty(), "fixture holds no reference")) {
    return fail;
  }
  Operator o = operator_of(c);
  try {
    if (c.expect == Expect::No) {
      ErrorCode code = ErrorCode::SyntaxError;
      try {
        apply_to_model(o, m);
      } catch (const Error& e) {
        code = e.code();
      }
      expect(code == ErrorCode::IllegalOnReferencedEntity, "direct application was not refused");
    } else {
      SchemaModel after = apply_to_model(o, m);
      expect(!after.has_errors(), "direct application leaves errors");
      auto refs = refs_from(after, c.referencer);
      if (c.expect == Expect::Auto) {
        // the RDBMS carries the checked reference over to the changed entity
        const std::string want = new_path_of(c);
        bool follows = false;
        for (const Reference* r : refs)
          follows |= r->checked && r->resolved && after.entity(r->target).path.str().rfind(want, 0) == 0;
        expect(follows, "referencer does not follow to " + want);
      } else {
        expect(source_of(after, c.referencer) == source_of(m, c.referencer), "procedure body was edited");
        bool dangling = false;
        for (const Reference* r : refs) dangling |= !r->checked && !r->resolved;
        expect(dangling, "no dangling unchecked reference");
      }
    }

    // The planner lists the reference and closes into a patch the simulator accepts.
    Plan p = decide_all(m, {o}, preferred(c));
    bool listed = false;
    for (const auto& r : p.refs) listed |= r.checked == (c.expect != Expect::Unchecked);
    expect(listed, "reference missing from the plan");
    if (!expect(p.closed(), "plan stays open")) return fail;
    // an unchecked body left dangling on purpose is waived, as a reviewer would
    std::vector<Waiver> waivers;
    for (int h : p.unresolved_human_decisions()) waivers.push_back({p.nodes[h].actionable, "left dangling"});
    if (!waivers.empty()) {
      expect(c.expect == Expect::Unchecked, "human decision on a checked reference");
      p = derive_plan(m, {o}, decision_log_of(p), waivers);
    }
    if (!expect(p.unresolved_human_decisions().empty(), "human decisions remain")) return fail;
    SqlPatch patch = build_patch(p);
    SimulationReport report = simulate_plan_patch(p, patch);
    for (const auto& v : report.violations) fail.push_back("statement " + std::to_string(v.statement) + ": " + v.message);
    expect(report.matches_expected, "patch does not reach the planned model");
  } catch (const Error& e) {
    fail.push_back(std::string(to_string(e.code())) + ": " + e.what());
  }
  return fail;
}

inline std::string cell_name(const Cell& c) {
  return std::string(name(c.changed)) + " / " + name(c.action) + " / " + name(c.referencer);
}

}  // namespace dbevo::testing::matrix
