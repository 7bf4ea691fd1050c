#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dbevo/plan.hpp"

namespace dbevo {

enum class PatchPhase { CreateSchema, Drop, Unchecked, Main };
std::string_view to_string(PatchPhase p);

struct SqlCommand {
  std::string sql;  // one statement, terminated by ';'
  PatchPhase phase = PatchPhase::Main;
  std::string entity;         // path of the definition it acts on, at its position
  std::vector<int> operators;  // plan nodes realized by the command
};

struct SqlPatch {
  std::vector<SqlCommand> commands;
  bool commit = false;

  // BEGIN; commands separated by blank lines; ROLLBACK; or COMMIT;
  std::string text() const;
  nlohmann::json provenance_json() const;
};

struct PatchOptions {
  bool commit = false;
};

// Closed plan -> ordered patch. Drops run first with dependents before dependees (pre-state
// graph); function bodies follow; then alterations and creations with dependees first
// (post-state graph). Ties are broken by path.
// Throws PendingDecisions, UnresolvedHumanDecision or ContradictoryOperators.
SqlPatch build_patch(const Plan& plan, const PatchOptions& options = {});

struct Violation {
  std::size_t statement = 0;  // 1-based index among the patch statements, BEGIN included
  ErrorCode code = ErrorCode::UnresolvedInCheckedContext;
  std::string message;
};

struct SimulationReport {
  std::size_t statements = 0;
  std::vector<Violation> violations;
  std::vector<std::string> warnings;  // tolerated dangling references in unchecked bodies
  bool matches_expected = true;       // only meaningful when an expected model was given
  SchemaModel final_model;

  bool ok() const { return violations.empty() && matches_expected; }
  nlohmann::json to_json() const;
};

struct SimulationOptions {
  const SchemaModel* expected = nullptr;  // compared with the final state by canonical dump
  std::vector<std::string> tolerated;     // roots whose unchecked dangling references are warnings
};

// Replays the statements on `base` with the legality rules of the RDBMS and checks every
// checked reference after each statement and every reference at the end.
SimulationReport simulate_patch(std::string_view patch_sql, const SchemaModel& base,
                                const SimulationOptions& options = {});

// Simulation of a plan's own patch against its base and folded final model.
// Tolerates the dangling references of waived human decisions.
SimulationReport simulate_plan_patch(const Plan& plan, const SqlPatch& patch);

}  // namespace dbevo
