#include <doctest.h>

#include "matrix_cells.hpp"

using namespace dbevo;
using namespace dbevo::testing;
using namespace dbevo::testing::matrix;

TEST_CASE("conformance matrix of operators against referencing entities") {
  CHECK(cells().size() == 39);
  for (const Cell& c : cells()) {
    std::string cell = cell_name(c);
    CAPTURE(cell);
    for (const auto& f : check_cell(c)) FAIL_CHECK(f);
  }
}

TEST_CASE("an unchecked referencer follows only when its reference operator is chosen") {
  Cell c{Changed::Table, Action::Rename, Referencer::Procedure, Expect::Unchecked};
  SchemaModel m = load_schema(schema_for(c));
  SchemaModel kept = apply_to_model(operator_of(c), m);
  Plan fixed = decide_all(m, {operator_of(c)}, OpKind::RenameReferenceInStoredProcedure);
  CHECK(source_of(kept, c.referencer) == source_of(m, c.referencer));
  CHECK(source_of(fixed.final_model(), c.referencer).find("FROM n") != std::string::npos);
}

TEST_CASE("a referenced view column is renamed by recreating its dependent") {
  Cell c{Changed::ViewColumn, Action::Rename, Referencer::View, Expect::No};
  SchemaModel m = load_schema(schema_for(c));
  Plan p = decide_all(m, {operator_of(c)}, OpKind::RenameReferenceInSelectClause);
  REQUIRE(p.closed());
  SqlPatch patch = build_patch(p);
  std::string sql = patch.text();
  INFO(sql);
  CHECK(sql.find("DROP VIEW \"v\"") != std::string::npos);
  CHECK(sql.find("CREATE VIEW \"v\"") != std::string::npos);
  CHECK(simulate_plan_patch(p, patch).ok());
}
