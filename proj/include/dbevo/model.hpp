#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dbevo/catalog.hpp"
#include "dbevo/entity_path.hpp"
#include "dbevo/errors.hpp"

namespace dbevo {

enum class EntityKind {
  Namespace,
  Table,
  Column,
  Constraint,
  Type,
  View,
  StoredProcedure,
  Parameter,
  LocalVariable,
  Trigger,
  Query,
  Clause,
  DerivedTable,
};

enum class QueryKind { Select, Insert, Update, Delete };

enum class ClauseKind {
  With,
  Select,
  From,
  Where,
  Join,
  Union,
  Intersect,
  Except,
  GroupBy,
  OrderBy,
  Having,
  Limit,
  Offset,
  Fetch,
  Insert,
  Into,
  Returning,
  Update,
  Set,
  Delete,
};

enum class ReferenceKind { TableReference, ColumnReference, StoredProcedureCall, VariableReference, TypeReference };

std::string_view to_string(EntityKind k);
std::string_view to_string(QueryKind k);
std::string_view to_string(ClauseKind k);
std::string_view to_string(ReferenceKind k);

using EntityId = std::size_t;
inline constexpr EntityId kNoEntity = std::numeric_limits<EntityId>::max();

struct SelectItem {
  Span span;  // whole item including any alias
  Span expr_span;
  std::string output_name;
  bool has_alias = false;
  Span alias_span;
  bool bare_column = false;  // the expression is a single (qualified) column name
  bool wildcard = false;
};

struct Entity {
  EntityId id = kNoEntity;
  EntityKind kind = EntityKind::Namespace;
  std::string name;
  EntityId container = kNoEntity;
  EntityPath path;
  DefUid def_uid = 0;
  std::string declared_type;  // Column, Parameter, LocalVariable (normalized)
  int ordinal = 0;            // Column (1-based), Parameter (1-based)
  ConstraintKind constraint_kind = ConstraintKind::Check;
  QueryKind query_kind = QueryKind::Select;
  ClauseKind clause_kind = ClauseKind::Select;
  EntityId root = kNoEntity;  // source-bearing entity whose text `span` indexes
  Span span;
  std::string source_text;    // set on source-bearing entities
  std::size_t expr_offset = 0;  // Check/Default expression or trigger WHEN start
  bool has_expression = false;
  std::vector<SelectItem> select_items;  // Select clauses
  int select_item = -1;                  // view columns: producing item of the top-level SELECT
  bool fk_node = false;                  // foreign key pointing at another table
  std::vector<EntityId> children;
};

struct Reference {
  std::size_t id = 0;
  ReferenceKind kind = ReferenceKind::ColumnReference;
  EntityId owner = kNoEntity;
  EntityId root = kNoEntity;
  EntityId target = kNoEntity;
  Span span;       // full written name, possibly qualified
  Span name_span;  // terminal identifier only
  bool resolved = false;
  bool checked = true;        // false inside stored procedure bodies
  bool via_source = false;    // qualifier bound through an unaliased FROM source
  bool wildcard = false;      // relation expanded by SELECT *
  bool qualified = false;     // written with an explicit namespace
  int select_item = -1;       // item of the owning Select clause, if any
  std::vector<std::string> name_parts;
  std::size_t arg_count = 0;  // StoredProcedureCall
};

struct Diagnostic {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Warning;
  ErrorCode code = ErrorCode::UnresolvedInCheckedContext;
  std::string message;
  std::string root;  // path of the source-bearing entity
  Span span;
};

class SchemaModel {
 public:
  const Catalog& catalog() const { return catalog_; }
  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<Reference>& references() const { return references_; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
  const Entity& entity(EntityId id) const { return entities_.at(id); }
  const Reference& reference(std::size_t id) const { return references_.at(id); }

  // Resolves a path. Unqualified top-level names get "public" prepended; a function
  // segment without signature matches a unique overload.
  std::optional<EntityId> find(const EntityPath& path) const;
  EntityId resolve(const EntityPath& path) const;  // throws UnknownEntity
  std::optional<EntityId> by_uid(DefUid uid) const;

  // Table, View, StoredProcedure or Trigger containing `id` (constraints ascend to their table).
  EntityId actionable(EntityId id) const;
  // Node of the dependency graph: like actionable, except that a foreign key pointing at
  // another table is a node of its own.
  EntityId graph_node(EntityId id) const;
  bool contains(EntityId ancestor, EntityId id) const;
  bool is_fk_node(EntityId id) const;

  // Reference lying at [start,end) in the text of the source-bearing entity `root`.
  std::optional<std::size_t> reference_at(EntityId owner_or_root, Span span) const;
  std::vector<std::size_t> references_in_root(EntityId root) const;

  // Columns of a table or view in ordinal order.
  std::vector<EntityId> columns_of(EntityId relation) const;
  EntityId child_named(EntityId parent, std::string_view name, EntityKind kind) const;

  std::size_t count(EntityKind kind) const;
  bool has_errors() const;

 private:
  friend class ModelBuilder;
  Catalog catalog_;
  std::vector<Entity> entities_;
  std::vector<Reference> references_;
  std::vector<Diagnostic> diagnostics_;
  std::map<DefUid, EntityId> uid_index_;
  std::map<std::string, EntityId> path_index_;
};

// Builds the full model. Never throws on unresolved names: they become references
// with resolved=false plus a diagnostic (error when checked, warning otherwise).
SchemaModel analyze(Catalog catalog);

// parse_dump + analyze; any error-severity diagnostic or parse error becomes ParseFailure,
// carrying the original code in the message.
SchemaModel load_schema(std::string_view dump);

// Loose identifier-check helpers shared with the planner.
bool is_builtin_function(std::string_view name);

struct DependencyGraph {
  struct Node {
    EntityId entity = kNoEntity;
    DefUid uid = 0;
    std::string path;
    EntityKind kind = EntityKind::Table;
  };
  struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    std::size_t ref_count = 0;
  };
  std::vector<Node> nodes;  // sorted by path
  std::vector<Edge> edges;  // sorted by (from, to)
  std::optional<std::vector<std::size_t>> cycle;  // node indices, first == last

  std::optional<std::size_t> node_of_uid(DefUid uid) const;
  // reach[a][b]: a depends on b, directly or transitively.
  std::vector<std::vector<bool>> reachability() const;
  std::string to_dot() const;
  std::string to_json() const;
};

DependencyGraph dependency_graph(const SchemaModel& model);

// Resolved references whose target is the entity, or with `transitive`, anything it contains.
std::vector<std::size_t> dependents_of(const SchemaModel& model, const EntityPath& target, bool transitive);

struct EntitySource {
  std::string text;
  std::vector<std::pair<std::size_t, Span>> references;  // reference id, span in text
};
// Throws UnknownEntity or NotSourceBearing.
EntitySource entity_source(const SchemaModel& model, const EntityPath& path);

}  // namespace dbevo
