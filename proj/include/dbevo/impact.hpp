#pragma once

#include <set>
#include <string>
#include <vector>

#include "dbevo/catalog.hpp"
#include "dbevo/model.hpp"
#include "dbevo/operators.hpp"

namespace dbevo {

struct CoherentSubset {
  int op_id = 0;
  std::string label;  // e.g. column.viewSelect
  std::vector<std::size_t> references;
};

// References that may break when `op` is applied to `m`. References owned by a
// definition whose uid is in `removed` (or nested in one) are left out, because the
// plan deletes their owner anyway.
std::vector<std::size_t> potential_impact(const Operator& op, const SchemaModel& m,
                                          const std::set<DefUid>& removed = {});

// Partition of `impact` by the subset scheme of the operator kind. Empty cells are
// omitted. Throws NoSchemeForOperator when a kind with a non-empty impact has no scheme.
std::vector<CoherentSubset> coherent_subsets(const Operator& op, const SchemaModel& m,
                                             const std::vector<std::size_t>& impact);

// Subset labels of the scheme of `kind`, in presentation order; empty when the kind
// has no scheme.
const std::vector<std::string>& subset_scheme(OpKind kind);

// View column whose name follows the reference `r` when the reference is renamed:
// set only for bare, unaliased items of a view's top-level SELECT.
EntityId output_column_of(const SchemaModel& m, const Reference& r);

// True when the owner of `r`, or one of its containers, has a uid in `uids`.
bool owned_within(const SchemaModel& m, const Reference& r, const std::set<DefUid>& uids);

}  // namespace dbevo
