#include "dbevo/impact.hpp"

#include <algorithm>
#include <map>

#include "dbevo/apply.hpp"

namespace dbevo {

namespace {

enum class Family { None, ColumnChange, ColumnRemove, EntityChange, EntityRemove, Variable, ViewColumn };

Family family_of(OpKind k) {
  switch (k) {
    case OpKind::RenameColumn:
    case OpKind::RetypeColumn:
      return Family::ColumnChange;
    case OpKind::RemoveColumn:
      return Family::ColumnRemove;
    case OpKind::RenameTable:
    case OpKind::MoveTable:
    case OpKind::RenameView:
    case OpKind::MoveView:
    case OpKind::RenameStoredProcedure:
    case OpKind::MoveStoredProcedure:
      return Family::EntityChange;
    case OpKind::RemoveTable:
    case OpKind::RemoveView:
    case OpKind::RemoveStoredProcedure:
      return Family::EntityRemove;
    case OpKind::RenameParameter:
    case OpKind::RenameLocalVariable:
      return Family::Variable;
    case OpKind::RenameReferenceInSelectClause:
      return Family::ViewColumn;
    default:
      return Family::None;
  }
}

std::string_view entity_prefix(OpKind k) {
  switch (k) {
    case OpKind::RenameTable:
    case OpKind::MoveTable:
    case OpKind::RemoveTable:
      return "table";
    case OpKind::RenameView:
    case OpKind::MoveView:
    case OpKind::RemoveView:
      return "view";
    default:
      return "procedure";
  }
}

bool in_view_select(const SchemaModel& m, const Reference& r) {
  if (!r.checked || r.select_item < 0 || r.wildcard) return false;
  const Entity& owner = m.entity(r.owner);
  return owner.kind == EntityKind::Clause && owner.clause_kind == ClauseKind::Select &&
         m.entity(r.root).kind == EntityKind::View;
}

std::string column_label(const SchemaModel& m, const Reference& r, std::string_view prefix, bool split_select) {
  const Entity& owner = m.entity(r.owner);
  std::string p(prefix);
  if (owner.kind == EntityKind::Constraint) return p + ".constraints";
  if (owner.kind == EntityKind::Trigger) return p + ".triggers";
  if (!r.checked) return p + ".procClauses";
  if (!split_select) return p + ".viewClauses";
  return p + (in_view_select(m, r) ? ".viewSelect" : ".viewOther");
}

std::string label_of(const Operator& op, const SchemaModel& m, const Reference& r) {
  switch (family_of(op.kind)) {
    case Family::ColumnChange:
      return column_label(m, r, "column", true);
    case Family::ColumnRemove:
      return column_label(m, r, "column", false);
    case Family::ViewColumn:
      return column_label(m, r, "viewColumn", true);
    case Family::EntityChange:
      return std::string(entity_prefix(op.kind)) + (r.checked ? ".checked" : ".unchecked");
    case Family::EntityRemove:
      return std::string(entity_prefix(op.kind)) + (r.checked ? ".checkedReferencers" : ".unchecked");
    case Family::Variable:
      return "variable.references";
    case Family::None:
      break;
  }
  throw Error(ErrorCode::NoSchemeForOperator, std::string("no coherent subset scheme for ") + std::string(to_string(op.kind)));
}

}  // namespace

const std::vector<std::string>& subset_scheme(OpKind kind) {
  static const std::map<Family, std::vector<std::string>> schemes = {
      {Family::ColumnChange,
       {"column.constraints", "column.triggers", "column.viewSelect", "column.viewOther", "column.procClauses"}},
      {Family::ColumnRemove, {"column.constraints", "column.triggers", "column.viewClauses", "column.procClauses"}},
      {Family::ViewColumn, {"viewColumn.viewSelect", "viewColumn.viewOther", "viewColumn.procClauses"}},
      {Family::Variable, {"variable.references"}},
  };
  static const std::map<OpKind, std::vector<std::string>> entity_schemes = [] {
    std::map<OpKind, std::vector<std::string>> out;
    for (OpKind k : all_op_kinds()) {
      std::string p(entity_prefix(k));
      if (family_of(k) == Family::EntityChange) out[k] = {p + ".checked", p + ".unchecked"};
      if (family_of(k) == Family::EntityRemove) out[k] = {p + ".checkedReferencers", p + ".unchecked"};
    }
    return out;
  }();
  static const std::vector<std::string> none;
  if (auto it = entity_schemes.find(kind); it != entity_schemes.end()) return it->second;
  if (auto it = schemes.find(family_of(kind)); it != schemes.end()) return it->second;
  return none;
}

EntityId output_column_of(const SchemaModel& m, const Reference& r) {
  if (!in_view_select(m, r)) return kNoEntity;
  const Entity& clause = m.entity(r.owner);
  const SelectItem& item = clause.select_items.at(static_cast<std::size_t>(r.select_item));
  if (item.has_alias || !item.bare_column) return kNoEntity;
  // only the top-level SELECT of the view names its columns
  const Entity& query = m.entity(clause.container);
  if (query.kind != EntityKind::Query || query.container != r.root || query.name != "$query" || clause.name != "$select1") {
    return kNoEntity;
  }
  for (EntityId c : m.columns_of(r.root)) {
    if (m.entity(c).select_item == r.select_item) return c;
  }
  return kNoEntity;
}

bool owned_within(const SchemaModel& m, const Reference& r, const std::set<DefUid>& uids) {
  if (uids.empty()) return false;
  for (EntityId e = r.owner; e != kNoEntity; e = m.entity(e).container) {
    const Entity& ent = m.entity(e);
    if (ent.def_uid != 0 && uids.contains(ent.def_uid)) return true;
  }
  return false;
}

std::vector<std::size_t> potential_impact(const Operator& op, const SchemaModel& m, const std::set<DefUid>& removed) {
  Family fam = family_of(op.kind);
  if (fam == Family::None) {
    // still validate the address of entity-oriented operators
    if (!op.target.empty() && !is_add(op.kind)) operator_target(m, op);
    return {};
  }
  EntityId target = kNoEntity;
  if (fam == Family::ViewColumn) {
    target = output_column_of(m, m.reference(find_reference(m, *op.ref)));
    if (target == kNoEntity) return {};
  } else {
    target = operator_target(m, op);
  }

  std::vector<std::size_t> out;
  const Entity& t = m.entity(target);
  for (const auto& r : m.references()) {
    if (!r.resolved || owned_within(m, r, removed)) continue;
    bool hit = false;
    switch (fam) {
      case Family::EntityRemove:
        hit = m.contains(target, r.target) && !m.contains(target, r.owner);
        break;
      case Family::ColumnRemove:
        if (r.target == target) {
          const Entity& owner = m.entity(r.owner);
          // a column's own NOT NULL and DEFAULT go away with it
          hit = !(owner.kind == EntityKind::Constraint && owner.container == t.container &&
                  (owner.constraint_kind == ConstraintKind::NotNull || owner.constraint_kind == ConstraintKind::Default));
        } else {
          hit = r.wildcard && r.checked && r.target == t.container && r.kind == ReferenceKind::TableReference;
        }
        break;
      case Family::Variable:
        hit = r.target == target && r.kind == ReferenceKind::VariableReference;
        break;
      default:
        hit = r.target == target;
        break;
    }
    if (hit) out.push_back(r.id);
  }
  return out;
}

std::vector<CoherentSubset> coherent_subsets(const Operator& op, const SchemaModel& m,
                                             const std::vector<std::size_t>& impact) {
  if (impact.empty()) return {};
  const auto& scheme = subset_scheme(op.kind);
  if (scheme.empty()) {
    throw Error(ErrorCode::NoSchemeForOperator, std::string("no coherent subset scheme for ") + std::string(to_string(op.kind)));
  }
  std::vector<CoherentSubset> cells;
  for (const auto& label : scheme) cells.push_back({op.id, label, {}});
  for (std::size_t id : impact) {
    std::string label = label_of(op, m, m.reference(id));
    auto it = std::find_if(cells.begin(), cells.end(), [&](const CoherentSubset& c) { return c.label == label; });
    if (it == cells.end()) throw Error(ErrorCode::NoSchemeForOperator, "label " + label + " outside the scheme");
    it->references.push_back(id);
  }
  std::erase_if(cells, [](const CoherentSubset& c) { return c.references.empty(); });
  return cells;
}

}  // namespace dbevo
