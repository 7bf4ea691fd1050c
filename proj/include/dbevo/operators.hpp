#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dbevo/errors.hpp"
#include "dbevo/model.hpp"

namespace dbevo {

enum class OpKind {
  AddTable,
  RemoveTable,
  RenameTable,
  MoveTable,
  AddColumn,
  RemoveColumn,
  RenameColumn,
  RetypeColumn,
  AddConstraint,
  RemoveConstraint,
  ModifyCheckConstraint,
  AddView,
  RemoveView,
  RenameView,
  MoveView,
  ModifyViewBody,
  RenameReferenceInSelectClause,
  RenameReferenceInNonSelectClause,
  AliasInSelectClause,
  AddStoredProcedure,
  RemoveStoredProcedure,
  RenameStoredProcedure,
  MoveStoredProcedure,
  ModifyBody,
  RenameLocalVariable,
  RenameParameter,
  RenameReferenceInStoredProcedure,
  AddTrigger,
  RemoveTrigger,
  ModifyTrigger,
  RenameReferenceInConstraint,
  Identity,
  DoNothing,
  HumanDecision,
};

std::string_view to_string(OpKind k);
// Accepts the canonical names plus "...Function" spellings for procedure operators.
OpKind parse_op_kind(std::string_view s);
const std::vector<OpKind>& all_op_kinds();

bool is_reference_oriented(OpKind k);
bool is_add(OpKind k);
bool is_remove(OpKind k);

// Wire address of a reference: owner path (clause, constraint, trigger, variable or
// procedure) plus its span in the root text.
struct RefAddress {
  std::string owner;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const RefAddress&, const RefAddress&) = default;
  friend auto operator<=>(const RefAddress&, const RefAddress&) = default;
};

RefAddress address_of(const SchemaModel& m, const Reference& r);
// Throws UnknownReference.
std::size_t find_reference(const SchemaModel& m, const RefAddress& a);

nlohmann::json to_json(const RefAddress& a);
RefAddress ref_address_from_json(const nlohmann::json& j);

enum class Provenance { UserStated, Recommendation, Automatic };

struct Operator {
  int id = 0;
  OpKind kind = OpKind::DoNothing;
  std::string target;             // entity path for entity-oriented kinds
  std::optional<RefAddress> ref;  // reference-oriented kinds, and special operators that decide a reference
  nlohmann::json args = nlohmann::json::object();
  Provenance provenance = Provenance::UserStated;
  int parent = -1;

  std::string arg(std::string_view key) const;
  bool has_arg(std::string_view key) const { return args.is_object() && args.contains(std::string(key)); }
  // Structural equality ignoring ids and provenance.
  bool same_effect(const Operator& o) const;
};

// {"op":..., "target": path | {owner,start,end}, "args": {...}}
Operator operator_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Operator& op, bool with_provenance = false);
std::vector<Operator> parse_operator_script(std::string_view text);

std::string describe(const Operator& op);

}  // namespace dbevo
