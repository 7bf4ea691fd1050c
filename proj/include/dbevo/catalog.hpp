#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dbevo/errors.hpp"

namespace dbevo {

// Stable identity of a definition across renames and moves.
using DefUid = std::uint32_t;

inline constexpr std::string_view kPublic = "public";

// A possibly-qualified relation or function name as written in a definition.
// An empty namespace means unqualified.
struct QualifiedName {
  std::string ns;
  std::string name;

  friend bool operator==(const QualifiedName&, const QualifiedName&) = default;
};

enum class ConstraintKind { PrimaryKey, ForeignKey, Unique, Check, NotNull, Default };

std::string_view to_string(ConstraintKind kind);

struct ColumnDef {
  DefUid uid = 0;
  std::string name;
  std::string type;  // as written, whitespace-collapsed and lowercased
};

struct ConstraintDef {
  DefUid uid = 0;
  std::string name;
  ConstraintKind kind = ConstraintKind::Check;
  std::vector<std::string> columns;
  QualifiedName ref_table;
  std::vector<std::string> ref_columns;
  std::string expression;  // Check and Default
  std::string fk_actions;  // trailing ON DELETE / ON UPDATE / MATCH text, verbatim
};

struct TableDef {
  DefUid uid = 0;
  std::string ns{kPublic};
  std::string name;
  std::vector<ColumnDef> columns;
  std::vector<ConstraintDef> constraints;

  ColumnDef* find_column(std::string_view n);
  const ColumnDef* find_column(std::string_view n) const;
  ConstraintDef* find_constraint(std::string_view n);
  const ConstraintDef* find_constraint(std::string_view n) const;
};

struct ViewDef {
  DefUid uid = 0;
  std::string ns{kPublic};
  std::string name;
  std::string query;
};

struct ParamDef {
  DefUid uid = 0;
  std::string name;  // may be empty
  std::string type;
  std::string mode;  // "", "in", "out", "inout", "variadic"
};

struct FunctionDef {
  DefUid uid = 0;
  std::string ns{kPublic};
  std::string name;
  std::vector<ParamDef> params;
  std::string returns;
  std::string body;
  std::string language{"plpgsql"};
  std::string options;  // volatility and similar trailing options, verbatim

  // Normalized input parameter types; OUT parameters are not part of it.
  std::vector<std::string> signature() const;
  std::size_t input_arity() const { return signature().size(); }
};

struct TriggerDef {
  DefUid uid = 0;
  std::string ns{kPublic};  // always the namespace of its table
  std::string name;
  std::string timing;               // BEFORE, AFTER, INSTEAD OF
  std::vector<std::string> events;  // INSERT, UPDATE, DELETE, TRUNCATE
  std::vector<std::string> update_columns;
  QualifiedName table;
  std::string for_each{"ROW"};
  std::string when;
  QualifiedName function;
  std::string function_args;
};

struct Catalog {
  std::vector<std::string> namespaces;  // explicitly created; public always exists
  std::vector<TableDef> tables;
  std::vector<ViewDef> views;
  std::vector<FunctionDef> functions;
  std::vector<TriggerDef> triggers;
  DefUid next_uid = 1;

  DefUid fresh() { return next_uid++; }
  bool has_namespace(std::string_view ns) const;

  TableDef* table(DefUid uid);
  const TableDef* table(DefUid uid) const;
  ViewDef* view(DefUid uid);
  const ViewDef* view(DefUid uid) const;
  FunctionDef* function(DefUid uid);
  const FunctionDef* function(DefUid uid) const;
  TriggerDef* trigger(DefUid uid);
  const TriggerDef* trigger(DefUid uid) const;

  const TableDef* find_table(std::string_view ns, std::string_view name) const;
  const ViewDef* find_view(std::string_view ns, std::string_view name) const;
  // True when a table or view with that name lives in `ns`.
  bool relation_exists(std::string_view ns, std::string_view name) const;
  std::vector<const FunctionDef*> find_functions(std::string_view ns, std::string_view name) const;

  // Locates the table owning a column or constraint uid.
  TableDef* owner_of(DefUid sub_uid);
  const TableDef* owner_of(DefUid sub_uid) const;
  // Locates the function owning a parameter uid.
  const FunctionDef* function_of_param(DefUid param_uid) const;

  // Validated insertions; throw ContradictsModel on duplicates or a missing namespace.
  // Unnamed constraints receive their default names.
  void add_namespace(const std::string& ns);
  TableDef& add_table(TableDef t);
  ViewDef& add_view(ViewDef v);
  FunctionDef& add_function(FunctionDef f);
  TriggerDef& add_trigger(TriggerDef t, std::string_view table_ns);
  ConstraintDef& add_constraint(TableDef& t, ConstraintDef c);

  // Assigns fresh uids to every nested definition with uid 0.
  void assign_uids(TableDef& t);
  void assign_uids(FunctionDef& f);
};

// "name" or "ns"."name"; the namespace is dropped when it equals `context_ns`.
std::string render_qualified(std::string_view ns, std::string_view name, std::string_view context_ns = kPublic);
// Same as render_qualified with a trigger-style QualifiedName where empty ns means unqualified.
std::string render_name(const QualifiedName& q, std::string_view context_ns = kPublic);

std::string render_create_table(const TableDef& t);
std::string render_create_view(const ViewDef& v, bool or_replace);
std::string render_create_function(const FunctionDef& f, bool or_replace);
std::string render_function_signature(const FunctionDef& f);  // "name"(int4,varchar) form for ALTER/DROP

// Text of the trigger definition plus the offsets of its name-bearing parts.
struct TriggerText {
  std::string text;
  Span table_span;
  Span function_span;
  std::vector<Span> update_column_spans;
  std::size_t when_offset = 0;  // scalar offset of the WHEN condition text, if any
};
TriggerText render_trigger(const TriggerDef& t, std::string_view table_ns);

// The ALTER TABLE fragment that adds a constraint, plus the offsets of its references.
struct ConstraintText {
  std::string text;
  std::vector<Span> column_spans;
  Span ref_table_span;
  std::vector<Span> ref_column_spans;
  std::size_t expr_offset = 0;
};
ConstraintText render_constraint(const ConstraintDef& c, std::string_view table_ns);
// Fragment that removes a constraint: DROP CONSTRAINT, DROP NOT NULL or DROP DEFAULT.
std::string render_constraint_drop(const ConstraintDef& c);

// Name PostgreSQL would pick for an unnamed constraint, deduplicated within `t`.
std::string default_constraint_name(const TableDef& t, ConstraintKind kind, const std::vector<std::string>& columns);

// Order-independent, uid-free text of the whole catalog. Two catalogs describe the
// same schema iff their canonical dumps are equal.
std::string canonical_dump(const Catalog& c);

}  // namespace dbevo
