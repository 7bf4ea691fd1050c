#include "dbevo/apply.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "dbevo/ddl.hpp"
#include "dbevo/lexer.hpp"
#include "dbevo/utf8.hpp"

namespace dbevo {

namespace {

[[noreturn]] void contradicts(const std::string& msg) { throw Error(ErrorCode::ContradictsModel, msg); }
[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidOperator, msg); }

// Folded name parts of a written (possibly qualified) identifier.
std::vector<std::string> name_parts(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(text)) {
    if (t.is_name()) out.push_back(t.value);
  }
  return out;
}

QualifiedName qualified_from(std::string_view text) {
  auto parts = name_parts(text);
  if (parts.empty()) invalid("empty replacement name");
  if (parts.size() == 1) return {"", parts[0]};
  return {parts[parts.size() - 2], parts.back()};
}

std::string required(const Operator& op, std::string_view key) {
  std::string v = op.arg(key);
  if (v.empty()) invalid(std::string(to_string(op.kind)) + " needs args." + std::string(key));
  return v;
}

std::string folded_arg(const Operator& op, std::string_view key) {
  std::string raw = required(op, key);
  auto parts = name_parts(raw);
  if (parts.size() != 1) invalid("args." + std::string(key) + " must be a single identifier");
  return parts[0];
}

Statement single_statement(const std::string& sql, StatementKind kind, const char* what) {
  auto sts = parse_statements(sql);
  if (sts.size() != 1 || sts[0].kind != kind) invalid(std::string("args.sql must hold exactly one ") + what);
  return std::move(sts[0]);
}

void splice_text(std::string& text, std::vector<std::pair<Span, std::string>> edits) {
  std::sort(edits.begin(), edits.end(), [](const auto& a, const auto& b) { return a.first.start > b.first.start; });
  for (const auto& [span, repl] : edits) text = utf8::splice(text, span, repl);
}

std::vector<std::size_t> checked_refs_to(const SchemaModel& m, EntityId target) {
  std::vector<std::size_t> out;
  for (const auto& r : m.references()) {
    if (r.resolved && r.checked && r.target == target) out.push_back(r.id);
  }
  return out;
}

const SelectItem* item_of(const SchemaModel& m, const Reference& r) {
  if (r.select_item < 0) return nullptr;
  const Entity& owner = m.entity(r.owner);
  if (owner.kind != EntityKind::Clause || owner.clause_kind != ClauseKind::Select) return nullptr;
  if (static_cast<std::size_t>(r.select_item) >= owner.select_items.size()) return nullptr;
  return &owner.select_items[static_cast<std::size_t>(r.select_item)];
}

}  // namespace

void apply_splices(Catalog& cat, const SchemaModel& m, std::vector<Splice> splices) {
  std::map<EntityId, std::vector<Splice>> by_root;
  for (auto& s : splices) by_root[s.root].push_back(std::move(s));
  for (auto& [root, list] : by_root) {
    std::sort(list.begin(), list.end(), [](const Splice& a, const Splice& b) {
      return a.span.start != b.span.start ? a.span.start < b.span.start : a.span.end < b.span.end;
    });
    // drop exact duplicates, reject overlaps
    std::vector<Splice> uniq;
    for (auto& s : list) {
      if (!uniq.empty() && uniq.back().span == s.span && uniq.back().text == s.text) continue;
      if (!uniq.empty() && (uniq.back().span.overlaps(s.span) || uniq.back().span == s.span)) {
        throw Error(ErrorCode::ContradictoryOperators,
                    "conflicting edits in " + m.entity(root).path.str() + " at [" + std::to_string(s.span.start) + "," +
                        std::to_string(s.span.end) + ")");
      }
      uniq.push_back(std::move(s));
    }
    const Entity& e = m.entity(root);
    std::vector<std::pair<Span, std::string>> edits;
    for (const auto& s : uniq) edits.emplace_back(s.span, s.text);
    switch (e.kind) {
      case EntityKind::View: {
        ViewDef* v = cat.view(e.def_uid);
        if (!v) throw Error(ErrorCode::MissingDefinition, "no definition for " + e.path.str());
        splice_text(v->query, edits);
        break;
      }
      case EntityKind::StoredProcedure: {
        FunctionDef* f = cat.function(e.def_uid);
        if (!f) throw Error(ErrorCode::MissingDefinition, "no definition for " + e.path.str());
        splice_text(f->body, edits);
        break;
      }
      case EntityKind::Constraint: {
        TableDef* t = cat.owner_of(e.def_uid);
        if (!t) throw Error(ErrorCode::MissingDefinition, "no definition for " + e.path.str());
        ConstraintDef* c = nullptr;
        for (auto& k : t->constraints)
          if (k.uid == e.def_uid) c = &k;
        ConstraintText rt = render_constraint(*c, t->ns);
        std::vector<std::pair<Span, std::string>> expr_edits;
        for (const auto& [span, repl] : edits) {
          bool done = false;
          for (std::size_t i = 0; i < rt.column_spans.size() && !done; ++i) {
            if (rt.column_spans[i].contains(span)) {
              c->columns[i] = name_parts(repl).back();
              done = true;
            }
          }
          for (std::size_t i = 0; i < rt.ref_column_spans.size() && !done; ++i) {
            if (rt.ref_column_spans[i].contains(span)) {
              c->ref_columns[i] = name_parts(repl).back();
              done = true;
            }
          }
          if (!done && c->kind == ConstraintKind::ForeignKey && rt.ref_table_span.contains(span)) {
            std::string full = utf8::splice(utf8::substr(rt.text, rt.ref_table_span),
                                            {span.start - rt.ref_table_span.start, span.end - rt.ref_table_span.start},
                                            repl);
            c->ref_table = qualified_from(full);
            if (c->ref_table.ns == t->ns && t->ns == kPublic) c->ref_table.ns.clear();
            done = true;
          }
          if (!done && span.start >= rt.expr_offset && rt.expr_offset > 0) {
            expr_edits.push_back({{span.start - rt.expr_offset, span.end - rt.expr_offset}, repl});
            done = true;
          }
          if (!done) invalid("edit outside any editable position of " + e.path.str());
        }
        splice_text(c->expression, expr_edits);
        break;
      }
      case EntityKind::Trigger: {
        TriggerDef* tr = cat.trigger(e.def_uid);
        if (!tr) throw Error(ErrorCode::MissingDefinition, "no definition for " + e.path.str());
        TriggerText rt = render_trigger(*tr, tr->ns);
        std::vector<std::pair<Span, std::string>> when_edits;
        for (const auto& [span, repl] : edits) {
          auto sub = [&](Span whole) {
            return utf8::splice(utf8::substr(rt.text, whole), {span.start - whole.start, span.end - whole.start}, repl);
          };
          bool done = false;
          if (rt.table_span.contains(span)) {
            tr->table = qualified_from(sub(rt.table_span));
            done = true;
          } else if (rt.function_span.contains(span)) {
            tr->function = qualified_from(sub(rt.function_span));
            done = true;
          }
          for (std::size_t i = 0; i < rt.update_column_spans.size() && !done; ++i) {
            if (rt.update_column_spans[i].contains(span)) {
              tr->update_columns[i] = name_parts(repl).back();
              done = true;
            }
          }
          if (!done && !tr->when.empty() && span.start >= rt.when_offset) {
            when_edits.push_back({{span.start - rt.when_offset, span.end - rt.when_offset}, repl});
            done = true;
          }
          if (!done) invalid("edit outside any editable position of " + e.path.str());
        }
        splice_text(tr->when, when_edits);
        break;
      }
      default:
        throw Error(ErrorCode::NotSourceBearing, e.path.str() + " has no editable source");
    }
  }
}

std::string rename_replacement(const SchemaModel& m, const Reference& r, const std::string& new_name) {
  const std::string& text = m.entity(r.root).source_text;
  std::string prefix = utf8::substr(text, {r.span.start, r.name_span.start});
  return prefix + sql_identifier(new_name);
}

std::string move_replacement(const SchemaModel& m, const Reference& r, const std::string& ns, bool always_qualify) {
  if (!always_qualify && !r.qualified && ns == kPublic) return {};
  std::string name = r.resolved ? m.entity(r.target).name : r.name_parts.back();
  return sql_identifier(ns) + "." + sql_identifier(name);
}

std::vector<Splice> alias_splices(const SchemaModel& m, const Reference& r, const std::string& replacement,
                                  const std::string& keep_name) {
  std::vector<Splice> out{{r.root, r.span, replacement}};
  const SelectItem* item = item_of(m, r);
  if (item && !item->has_alias) {
    out.push_back({r.root, {item->span.end, item->span.end}, " AS " + sql_identifier(keep_name)});
  }
  return out;
}

std::vector<std::size_t> blocking_references(const SchemaModel& m, EntityId target) {
  std::vector<std::size_t> out;
  for (const auto& r : m.references()) {
    if (!r.resolved || !r.checked) continue;
    if (!m.contains(target, r.target)) continue;
    if (m.contains(target, r.owner)) continue;
    // a column's NotNull/Default constraints go away with the column
    const Entity& owner = m.entity(r.owner);
    if (owner.kind == EntityKind::Constraint &&
        (owner.constraint_kind == ConstraintKind::NotNull || owner.constraint_kind == ConstraintKind::Default) &&
        m.entity(target).kind == EntityKind::Column && r.target == target) {
      continue;
    }
    out.push_back(r.id);
  }
  return out;
}

EntityId operator_target(const SchemaModel& m, const Operator& op) {
  if (op.target.empty()) {
    if (op.ref) return m.reference(find_reference(m, *op.ref)).owner;
    throw Error(ErrorCode::UnknownEntity, std::string(to_string(op.kind)) + " has no target");
  }
  return m.resolve(EntityPath::parse(op.target));
}

EntityId actionable_entity(const SchemaModel& m, const Operator& op) {
  if (is_reference_oriented(op.kind) || (op.target.empty() && op.ref)) {
    const Reference& r = m.reference(find_reference(m, *op.ref));
    return m.actionable(r.owner);
  }
  return m.actionable(operator_target(m, op));
}

std::vector<Splice> reference_splices(const SchemaModel& m, const Operator& op) {
  if (!is_reference_oriented(op.kind) || !op.ref) invalid(std::string(to_string(op.kind)) + " is not reference-oriented");
  const Reference& r = m.reference(find_reference(m, *op.ref));
  std::string repl = op.arg("replacement");
  if (repl.empty()) repl = sql_identifier(required(op, "new_name"));
  if (op.kind != OpKind::AliasInSelectClause) return {{r.root, r.span, repl}};
  const SelectItem* item = item_of(m, r);
  std::string keep = op.arg("alias");
  if (keep.empty()) keep = item ? item->output_name : r.name_parts.back();
  return alias_splices(m, r, repl, keep);
}

namespace {

void fail_if_blocked(const SchemaModel& m, EntityId target, const Operator& op, bool strict) {
  if (!strict) return;
  auto refs = blocking_references(m, target);
  if (refs.empty()) return;
  std::string who;
  std::set<std::string> seen;
  for (std::size_t id : refs) {
    std::string p = m.entity(m.actionable(m.reference(id).owner)).path.str();
    if (seen.insert(p).second) who += (who.empty() ? "" : ", ") + p;
  }
  throw Error(ErrorCode::IllegalOnReferencedEntity,
              std::string(to_string(op.kind)) + " on " + m.entity(target).path.str() + " is referenced by " + who);
}

void expect_kind(const SchemaModel& m, EntityId id, std::initializer_list<EntityKind> kinds, const Operator& op) {
  for (auto k : kinds)
    if (m.entity(id).kind == k) return;
  invalid(std::string(to_string(op.kind)) + " cannot target " + std::string(to_string(m.entity(id).kind)) + " " +
          m.entity(id).path.str());
}

// Splices for checked references to a renamed relation or procedure.
std::vector<Splice> rename_splices(const SchemaModel& m, EntityId target, const std::string& new_name) {
  std::vector<Splice> out;
  for (std::size_t id : checked_refs_to(m, target)) {
    const Reference& r = m.reference(id);
    out.push_back({r.root, r.span, rename_replacement(m, r, new_name)});
  }
  return out;
}

std::vector<Splice> move_splices(const SchemaModel& m, EntityId target, const std::string& ns) {
  std::vector<Splice> out;
  for (std::size_t id : checked_refs_to(m, target)) {
    const Reference& r = m.reference(id);
    if (r.via_source) continue;
    std::string repl = move_replacement(m, r, ns, false);
    if (!repl.empty()) out.push_back({r.root, r.span, repl});
  }
  return out;
}

// Renaming a table column: checked referencers follow; SELECT items keep their output name.
std::vector<Splice> column_rename_splices(const SchemaModel& m, EntityId col, const std::string& new_name) {
  std::vector<Splice> out;
  std::set<std::pair<EntityId, int>> aliased;
  const std::string old = m.entity(col).name;
  for (std::size_t id : checked_refs_to(m, col)) {
    const Reference& r = m.reference(id);
    out.push_back({r.root, r.span, sql_identifier(new_name)});
    const SelectItem* item = item_of(m, r);
    if (item && !item->has_alias && item->output_name == old && aliased.insert({r.owner, r.select_item}).second &&
        m.entity(r.root).kind == EntityKind::View) {
      out.push_back({r.root, {item->span.end, item->span.end}, " AS " + sql_identifier(old)});
    }
  }
  return out;
}

void check_namespace(const Catalog& cat, const std::string& ns) {
  if (!cat.has_namespace(ns)) contradicts("namespace " + ns + " does not exist");
}

bool function_exists(const Catalog& cat, const std::string& ns, const std::string& name,
                     const std::vector<std::string>& sig, DefUid except) {
  for (const FunctionDef* f : cat.find_functions(ns, name)) {
    if (f->uid != except && f->signature() == sig) return true;
  }
  return false;
}

}  // namespace

Catalog apply_operator(const SchemaModel& m, const Operator& op, const ApplyOptions& options) {
  Catalog cat = m.catalog();
  const bool strict = options.strict;
  switch (op.kind) {
    case OpKind::DoNothing:
    case OpKind::Identity:
      if (op.kind == OpKind::Identity) operator_target(m, op);
      return cat;
    case OpKind::HumanDecision:
      throw Error(ErrorCode::NoSqlForm, "a HumanDecision must be replaced by a concrete operator first");

    // --- tables
    case OpKind::AddTable: {
      Statement st = single_statement(required(op, "sql"), StatementKind::CreateTable, "CREATE TABLE");
      check_namespace(cat, st.table.ns);
      cat.add_table(std::move(st.table));
      return cat;
    }
    case OpKind::RemoveTable: {
      EntityId t = operator_target(m, op);
      expect_kind(m, t, {EntityKind::Table}, op);
      fail_if_blocked(m, t, op, strict);
      DefUid uid = m.entity(t).def_uid;
      std::erase_if(cat.tables, [&](const TableDef& d) { return d.uid == uid; });
      return cat;
    }
    case OpKind::RenameTable:
    case OpKind::RenameView: {
      EntityId t = operator_target(m, op);
      expect_kind(m, t, {op.kind == OpKind::RenameTable ? EntityKind::Table : EntityKind::View}, op);
      std::string nn = folded_arg(op, "new_name");
      const Entity& e = m.entity(t);
      std::string ns = m.entity(e.container).name;
      if (nn != e.name && cat.relation_exists(ns, nn)) contradicts("relation " + ns + "." + nn + " already exists");
      apply_splices(cat, m, rename_splices(m, t, nn));
      if (op.kind == OpKind::RenameTable) {
        cat.table(e.def_uid)->name = nn;
      } else {
        cat.view(e.def_uid)->name = nn;
      }
      return cat;
    }
    case OpKind::MoveTable:
    case OpKind::MoveView: {
      EntityId t = operator_target(m, op);
      expect_kind(m, t, {op.kind == OpKind::MoveTable ? EntityKind::Table : EntityKind::View}, op);
      std::string ns = folded_arg(op, "namespace");
      check_namespace(cat, ns);
      const Entity& e = m.entity(t);
      if (ns == m.entity(e.container).name) return cat;
      if (cat.relation_exists(ns, e.name)) contradicts("relation " + ns + "." + e.name + " already exists");
      // triggers follow their table into the new namespace
      std::vector<DefUid> triggers;
      for (std::size_t id : checked_refs_to(m, t)) {
        const Entity& owner = m.entity(m.reference(id).owner);
        if (owner.kind == EntityKind::Trigger) triggers.push_back(owner.def_uid);
      }
      auto splices = move_splices(m, t, ns);
      apply_splices(cat, m, std::move(splices));
      if (op.kind == OpKind::MoveTable) {
        cat.table(e.def_uid)->ns = ns;
      } else {
        cat.view(e.def_uid)->ns = ns;
      }
      for (DefUid uid : triggers) {
        TriggerDef* tr = cat.trigger(uid);
        tr->ns = ns;
        for (const auto& other : cat.triggers) {
          if (other.uid != uid && other.ns == ns && other.name == tr->name) {
            contradicts("trigger " + tr->name + " already exists in " + ns);
          }
        }
      }
      return cat;
    }

    // --- columns
    case OpKind::AddColumn: {
      EntityId t = operator_target(m, op);
      expect_kind(m, t, {EntityKind::Table}, op);
      std::string def = op.arg("definition");
      if (def.empty()) def = required(op, "name") + " " + required(op, "type") + " " + op.arg("constraints");
      Statement st = single_statement("ALTER TABLE x ADD COLUMN " + def, StatementKind::AlterTable, "column definition");
      if (st.actions.size() != 1 || st.actions[0].kind != AlterKind::AddColumn) invalid("bad column definition");
      TableDef* td = cat.table(m.entity(t).def_uid);
      AlterAction& a = st.actions[0];
      if (td->find_column(a.column.name)) contradicts("column " + a.column.name + " already exists");
      a.column.uid = cat.fresh();
      td->columns.push_back(a.column);
      for (auto& c : a.column_constraints) cat.add_constraint(*td, c);
      return cat;
    }
    case OpKind::RemoveColumn: {
      EntityId c = operator_target(m, op);
      expect_kind(m, c, {EntityKind::Column}, op);
      const Entity& col = m.entity(c);
      const Entity& owner = m.entity(col.container);
      fail_if_blocked(m, c, op, strict);
      if (owner.kind == EntityKind::View) {
        if (col.select_item < 0) contradicts("view column " + col.path.str() + " comes from a wildcard");
        // locate the producing item in the top-level SELECT clause
        EntityId q = m.child_named(col.container, "$query", EntityKind::Query);
        EntityId sel = q == kNoEntity ? kNoEntity : m.child_named(q, "$select1", EntityKind::Clause);
        if (sel == kNoEntity) invalid("view has no select list");
        const auto& items = m.entity(sel).select_items;
        if (items.size() < 2) contradicts("cannot remove the only column of " + owner.path.str());
        std::size_t i = static_cast<std::size_t>(col.select_item);
        Span cut = i + 1 < items.size() ? Span{items[i].span.start, items[i + 1].span.start}
                                        : Span{items[i - 1].span.end, items[i].span.end};
        apply_splices(cat, m, {{col.container, cut, ""}});
        return cat;
      }
      TableDef* td = cat.table(owner.def_uid);
      std::erase_if(td->constraints, [&](const ConstraintDef& k) {
        return (k.kind == ConstraintKind::NotNull || k.kind == ConstraintKind::Default) && k.columns.size() == 1 &&
               k.columns[0] == col.name;
      });
      std::erase_if(td->columns, [&](const ColumnDef& d) { return d.uid == col.def_uid; });
      return cat;
    }
    case OpKind::RenameColumn: {
      EntityId c = operator_target(m, op);
      expect_kind(m, c, {EntityKind::Column}, op);
      std::string nn = folded_arg(op, "new_name");
      const Entity& col = m.entity(c);
      const Entity& owner = m.entity(col.container);
      if (nn == col.name) return cat;
      if (m.child_named(col.container, nn, EntityKind::Column) != kNoEntity) {
        contradicts("column " + nn + " already exists in " + owner.path.str());
      }
      if (owner.kind == EntityKind::View) {
        // Renaming a view column is refused while other views select it.
        fail_if_blocked(m, c, op, strict);
        if (col.select_item < 0) contradicts("view column " + col.path.str() + " comes from a wildcard");
        EntityId q = m.child_named(col.container, "$query", EntityKind::Query);
        EntityId sel = m.child_named(q, "$select1", EntityKind::Clause);
        const SelectItem& item = m.entity(sel).select_items.at(static_cast<std::size_t>(col.select_item));
        Splice s = item.has_alias ? Splice{col.container, item.alias_span, sql_identifier(nn)}
                                  : Splice{col.container, {item.span.end, item.span.end}, " AS " + sql_identifier(nn)};
        apply_splices(cat, m, {s});
        return cat;
      }
      apply_splices(cat, m, column_rename_splices(m, c, nn));
      TableDef* td = cat.table(owner.def_uid);
      for (auto& d : td->columns)
        if (d.uid == col.def_uid) d.name = nn;
      return cat;
    }
    case OpKind::RetypeColumn: {
      EntityId c = operator_target(m, op);
      expect_kind(m, c, {EntityKind::Column}, op);
      const Entity& col = m.entity(c);
      if (m.entity(col.container).kind != EntityKind::Table) invalid("only table columns can be retyped");
      if (strict) {
        // the RDBMS refuses to retype a column a view depends on
        for (std::size_t id : checked_refs_to(m, c)) {
          const Reference& r = m.reference(id);
          if (m.entity(r.root).kind == EntityKind::View) {
            throw Error(ErrorCode::IllegalOnReferencedEntity,
                        "RetypeColumn on " + col.path.str() + " is referenced by " + m.entity(r.root).path.str());
          }
        }
      }
      TableDef* td = cat.table(m.entity(col.container).def_uid);
      for (auto& d : td->columns)
        if (d.uid == col.def_uid) d.type = required(op, "type");
      return cat;
    }

    // --- constraints
    case OpKind::AddConstraint: {
      EntityId t = operator_target(m, op);
      expect_kind(m, t, {EntityKind::Table}, op);
      TableDef* td = cat.table(m.entity(t).def_uid);
      std::string column = op.arg("column");
      if (!column.empty()) column = name_parts(column).at(0);
      ConstraintDef c = parse_constraint_clause(required(op, "definition"), *td, column);
      if (op.has_arg("name") && c.name.empty()) c.name = folded_arg(op, "name");
      cat.add_constraint(*td, std::move(c));
      return cat;
    }
    case OpKind::RemoveConstraint: {
      EntityId c = operator_target(m, op);
      expect_kind(m, c, {EntityKind::Constraint}, op);
      TableDef* td = cat.owner_of(m.entity(c).def_uid);
      std::erase_if(td->constraints, [&](const ConstraintDef& k) { return k.uid == m.entity(c).def_uid; });
      return cat;
    }
    case OpKind::ModifyCheckConstraint: {
      EntityId c = operator_target(m, op);
      expect_kind(m, c, {EntityKind::Constraint}, op);
      if (m.entity(c).constraint_kind != ConstraintKind::Check) invalid("ModifyCheckConstraint needs a Check constraint");
      TableDef* td = cat.owner_of(m.entity(c).def_uid);
      for (auto& k : td->constraints)
        if (k.uid == m.entity(c).def_uid) k.expression = required(op, "expression");
      return cat;
    }

    // --- views
    case OpKind::AddView: {
      Statement st = single_statement(required(op, "sql"), StatementKind::CreateView, "CREATE VIEW");
      check_namespace(cat, st.view.ns);
      cat.add_view(std::move(st.view));
      return cat;
    }
    case OpKind::RemoveView: {
      EntityId v = operator_target(m, op);
      expect_kind(m, v, {EntityKind::View}, op);
      fail_if_blocked(m, v, op, strict);
      DefUid uid = m.entity(v).def_uid;
      std::erase_if(cat.views, [&](const ViewDef& d) { return d.uid == uid; });
      return cat;
    }
    case OpKind::ModifyViewBody: {
      EntityId v = operator_target(m, op);
      expect_kind(m, v, {EntityKind::View}, op);
      cat.view(m.entity(v).def_uid)->query = required(op, "query");
      return cat;
    }

    // --- reference-oriented
    case OpKind::RenameReferenceInSelectClause:
    case OpKind::RenameReferenceInNonSelectClause:
    case OpKind::RenameReferenceInStoredProcedure:
    case OpKind::RenameReferenceInConstraint:
    case OpKind::AliasInSelectClause:
      apply_splices(cat, m, reference_splices(m, op));
      return cat;

    // --- stored procedures
    case OpKind::AddStoredProcedure: {
      Statement st = single_statement(required(op, "sql"), StatementKind::CreateFunction, "CREATE FUNCTION");
      check_namespace(cat, st.function.ns);
      cat.add_function(std::move(st.function));
      return cat;
    }
    case OpKind::RemoveStoredProcedure: {
      EntityId f = operator_target(m, op);
      expect_kind(m, f, {EntityKind::StoredProcedure}, op);
      fail_if_blocked(m, f, op, strict);
      DefUid uid = m.entity(f).def_uid;
      std::erase_if(cat.functions, [&](const FunctionDef& d) { return d.uid == uid; });
      return cat;
    }
    case OpKind::RenameStoredProcedure: {
      EntityId f = operator_target(m, op);
      expect_kind(m, f, {EntityKind::StoredProcedure}, op);
      std::string nn = folded_arg(op, "new_name");
      FunctionDef* fd = cat.function(m.entity(f).def_uid);
      if (function_exists(cat, fd->ns, nn, fd->signature(), fd->uid)) contradicts("function " + nn + " already exists");
      apply_splices(cat, m, rename_splices(m, f, nn));
      cat.function(m.entity(f).def_uid)->name = nn;
      return cat;
    }
    case OpKind::MoveStoredProcedure: {
      EntityId f = operator_target(m, op);
      expect_kind(m, f, {EntityKind::StoredProcedure}, op);
      std::string ns = folded_arg(op, "namespace");
      check_namespace(cat, ns);
      FunctionDef* fd = cat.function(m.entity(f).def_uid);
      if (ns == fd->ns) return cat;
      if (function_exists(cat, ns, fd->name, fd->signature(), fd->uid)) contradicts("function already exists in " + ns);
      apply_splices(cat, m, move_splices(m, f, ns));
      cat.function(m.entity(f).def_uid)->ns = ns;
      return cat;
    }
    case OpKind::ModifyBody: {
      EntityId f = operator_target(m, op);
      expect_kind(m, f, {EntityKind::StoredProcedure}, op);
      cat.function(m.entity(f).def_uid)->body = required(op, "body");
      return cat;
    }
    case OpKind::RenameParameter: {
      EntityId p = operator_target(m, op);
      expect_kind(m, p, {EntityKind::Parameter}, op);
      std::string nn = folded_arg(op, "new_name");
      EntityId f = m.entity(p).container;
      for (EntityId c : m.entity(f).children) {
        const Entity& ch = m.entity(c);
        if (c != p && (ch.kind == EntityKind::Parameter || ch.kind == EntityKind::LocalVariable) && ch.name == nn) {
          contradicts(nn + " already names a variable of " + m.entity(f).path.str());
        }
      }
      FunctionDef* fd = cat.function(m.entity(f).def_uid);
      for (auto& pd : fd->params)
        if (pd.uid == m.entity(p).def_uid) pd.name = nn;
      return cat;
    }
    case OpKind::RenameLocalVariable: {
      EntityId v = operator_target(m, op);
      expect_kind(m, v, {EntityKind::LocalVariable}, op);
      std::string nn = folded_arg(op, "new_name");
      EntityId f = m.entity(v).container;
      for (EntityId c : m.entity(f).children) {
        const Entity& ch = m.entity(c);
        if (c != v && (ch.kind == EntityKind::Parameter || ch.kind == EntityKind::LocalVariable) && ch.name == nn) {
          contradicts(nn + " already names a variable of " + m.entity(f).path.str());
        }
      }
      apply_splices(cat, m, {{f, m.entity(v).span, sql_identifier(nn)}});
      return cat;
    }

    // --- triggers
    case OpKind::AddTrigger: {
      Statement st = single_statement(required(op, "sql"), StatementKind::CreateTrigger, "CREATE TRIGGER");
      std::string ns = st.trigger.table.ns.empty() ? std::string(kPublic) : st.trigger.table.ns;
      cat.add_trigger(std::move(st.trigger), ns);
      return cat;
    }
    case OpKind::RemoveTrigger: {
      EntityId t = operator_target(m, op);
      expect_kind(m, t, {EntityKind::Trigger}, op);
      DefUid uid = m.entity(t).def_uid;
      std::erase_if(cat.triggers, [&](const TriggerDef& d) { return d.uid == uid; });
      return cat;
    }
    case OpKind::ModifyTrigger: {
      EntityId t = operator_target(m, op);
      expect_kind(m, t, {EntityKind::Trigger}, op);
      Statement st = single_statement(required(op, "sql"), StatementKind::CreateTrigger, "CREATE TRIGGER");
      TriggerDef* tr = cat.trigger(m.entity(t).def_uid);
      if (st.trigger.name != tr->name) invalid("ModifyTrigger cannot rename the trigger");
      DefUid uid = tr->uid;
      std::string ns = tr->ns;
      *tr = std::move(st.trigger);
      tr->uid = uid;
      tr->ns = ns;
      return cat;
    }
  }
  invalid("unhandled operator");
}

SchemaModel apply_to_model(const Operator& op, const SchemaModel& m) {
  return analyze(apply_operator(m, op, ApplyOptions{true}));
}

}  // namespace dbevo
