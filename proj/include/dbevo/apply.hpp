#pragma once

#include <string>
#include <vector>

#include "dbevo/catalog.hpp"
#include "dbevo/model.hpp"
#include "dbevo/operators.hpp"

namespace dbevo {

// A textual replacement inside the stored text of one source-bearing entity.
struct Splice {
  EntityId root = kNoEntity;
  Span span;
  std::string text;
};

// Applies splices (all expressed against `m`) to the definitions in `cat`. Constraint and
// trigger texts are rendered, so splices on their name positions edit the definition fields
// and splices inside Check/Default/WHEN expressions edit the expression text.
// Overlapping splices with different texts throw ContradictoryOperators.
void apply_splices(Catalog& cat, const SchemaModel& m, std::vector<Splice> splices);

struct ApplyOptions {
  // Enforce the "no" cells: refuse changes that would leave checked references dangling.
  bool strict = true;
};

// Model-level semantics of one operator, including the automatic updates the RDBMS
// performs on checked referencers. Returns the edited catalog.
Catalog apply_operator(const SchemaModel& m, const Operator& op, const ApplyOptions& options = {});
SchemaModel apply_to_model(const Operator& op, const SchemaModel& m);

// Entity addressed by an entity-oriented operator; throws UnknownEntity.
EntityId operator_target(const SchemaModel& m, const Operator& op);
// Containing entity on which an SQL command realizes the operator.
EntityId actionable_entity(const SchemaModel& m, const Operator& op);

// Replacement for the full span of `r` after its target is renamed; written qualifiers are kept.
std::string rename_replacement(const SchemaModel& m, const Reference& r, const std::string& new_name);
// Replacement after a move to `ns`; empty when the written text can stay (unqualified and ns is public).
std::string move_replacement(const SchemaModel& m, const Reference& r, const std::string& ns, bool always_qualify);

// Splices that rewrite a SELECT item so that its reference `r` reads `replacement`
// while the item keeps `keep_name` as output column name.
std::vector<Splice> alias_splices(const SchemaModel& m, const Reference& r, const std::string& replacement,
                                  const std::string& keep_name);

// Splices realizing one reference-oriented operator on `m`.
std::vector<Splice> reference_splices(const SchemaModel& m, const Operator& op);

// Checked references that would dangle if `target` (and what it contains) disappeared,
// ignoring references owned from inside `target` itself.
std::vector<std::size_t> blocking_references(const SchemaModel& m, EntityId target);

}  // namespace dbevo
