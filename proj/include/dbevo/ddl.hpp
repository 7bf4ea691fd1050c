#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dbevo/catalog.hpp"
#include "dbevo/errors.hpp"

namespace dbevo {

enum class StatementKind {
  CreateSchema,
  CreateTable,
  CreateView,
  CreateFunction,
  CreateTrigger,
  AlterTable,
  AlterView,
  AlterFunction,
  Drop,
  Begin,
  Commit,
  Rollback,
};

enum class AlterKind {
  AddConstraint,
  DropConstraint,
  AddColumn,
  DropColumn,
  RenameColumn,
  RenameTo,
  SetSchema,
  AlterColumnType,
  SetNotNull,
  DropNotNull,
  SetDefault,
  DropDefault,
};

struct AlterAction {
  AlterKind kind = AlterKind::RenameTo;
  std::string name;      // column or constraint the action addresses
  std::string new_name;  // RenameColumn / RenameTo / SetSchema target
  std::string type;
  std::string expression;
  ConstraintDef constraint;                     // AddConstraint
  ColumnDef column;                             // AddColumn
  std::vector<ConstraintDef> column_constraints;  // AddColumn inline constraints
};

enum class DropKind { Table, View, Function, Trigger, Schema };

struct Statement {
  StatementKind kind = StatementKind::Begin;
  Span span;          // scalar offsets of the statement in the input, without the semicolon
  std::string text;   // verbatim statement text
  QualifiedName name; // subject of ALTER / DROP
  std::optional<std::vector<std::string>> signature;  // function ALTER / DROP
  bool or_replace = false;
  bool cascade = false;
  bool if_exists = false;
  DropKind drop_kind = DropKind::Table;
  QualifiedName on_table;  // DROP TRIGGER ... ON t

  TableDef table;
  ViewDef view;
  FunctionDef function;
  TriggerDef trigger;
  std::vector<AlterAction> actions;
};

// Statement-level parse of semicolon-separated DDL. Create statements carry
// definitions with uid 0 and namespace "public" when unqualified.
// Throws SyntaxError or UnsupportedStatement with the offending span.
std::vector<Statement> parse_statements(std::string_view text);

// One column constraint or table constraint clause (e.g. "CHECK (a > 0)",
// "FOREIGN KEY (a) REFERENCES t (b)", "NOT NULL"), as accepted by AddConstraint.
// `column` names the column for column-level forms.
ConstraintDef parse_constraint_clause(std::string_view text, const TableDef& table, std::string_view column);

// Splits a dump into a catalog. Only CREATE SCHEMA/TABLE/VIEW/FUNCTION/TRIGGER and
// ALTER TABLE ... ADD CONSTRAINT are accepted.
Catalog parse_dump(std::string_view text);

}  // namespace dbevo
