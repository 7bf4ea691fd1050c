#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbevo/impact.hpp"
#include "dbevo/model.hpp"
#include "dbevo/operators.hpp"

namespace dbevo {

std::string_view to_string(Provenance p);

// A candidate operator resolving one impacted reference.
struct Recommendation {
  int id = 0;  // index in the reference's candidate list
  RefAddress for_reference;
  Operator candidate;
  std::string description;
};

// Candidate list for reference `r` sitting in subset `label` of `parent`'s impact,
// sorted by (kind name, target path).
std::vector<Recommendation> recommendations_for(const Operator& parent, const std::string& label, const SchemaModel& m,
                                                const Reference& r);
// All candidates of every reference in a subset, in reference order.
std::vector<Recommendation> recommendations_for(const Operator& parent, const CoherentSubset& subset,
                                                const SchemaModel& m);

// One entry of the decision log. `replacement` carries a concrete operator that
// stands in for a HumanDecision.
struct Decision {
  RefAddress reference;
  OpKind chosen = OpKind::DoNothing;
  std::optional<Operator> replacement;
};

nlohmann::json to_json(const Decision& d);
Decision decision_from_json(const nlohmann::json& j);
nlohmann::json decision_log_to_json(const std::vector<Decision>& log);
std::vector<Decision> decision_log_from_json(const nlohmann::json& j);

// HumanDecision operators whose actionable entity is `target` are accepted as DoNothing.
struct Waiver {
  std::string target;
  std::string justification;
};

enum class RefStatus { Pending, Decided, Automatic, Subsumed };
std::string_view to_string(RefStatus s);

struct ImpactedReference {
  RefAddress address;
  int op_id = -1;  // operator whose impact holds the reference
  int root = 0;    // index of the user operator whose subtree it belongs to
  std::string label;
  ReferenceKind kind = ReferenceKind::ColumnReference;
  std::string target;      // path of the referenced entity
  std::string actionable;  // path of the entity that must change
  std::string text;        // written reference
  bool checked = true;
  std::vector<Recommendation> candidates;
  RefStatus status = RefStatus::Pending;
  int chosen_op = -1;
};

struct PlanNode {
  Operator op;
  std::vector<int> children;
  std::vector<std::size_t> impacted;  // indices into Plan::refs
  int root = 0;
  int for_ref = -1;           // index into Plan::refs of the reference it resolves
  DefUid target_uid = 0;      // definition addressed by the operator
  DefUid actionable_uid = 0;  // 0 when the operator acts on no single definition
  std::string actionable;     // path at evaluation time
  bool waived = false;
};

struct PlanOptions {
  bool auto_accept_single = false;
};

struct Plan {
  SchemaModel base;
  std::vector<PlanNode> nodes;  // nodes[i].op.id == i; roots occupy the first ids
  std::vector<int> roots;
  std::vector<ImpactedReference> refs;
  std::vector<SchemaModel> states;  // states[i]: model before root i; back(): final model
  std::vector<Decision> unused_decisions;

  const SchemaModel& final_model() const { return states.back(); }
  std::size_t pending() const;
  bool closed() const { return pending() == 0; }
  // HumanDecision operators that are neither replaced nor waived.
  std::vector<int> unresolved_human_decisions() const;
  int depth() const;
  nlohmann::json tree_json() const;
};

// Replays the user operators and the decision log from scratch: impact of every operator
// on the model state preceding its root, recommendations, decisions, then the fold into the
// next state. Identity operators are injected for definitions that have to be dropped and
// recreated without changes of their own.
Plan derive_plan(const SchemaModel& base, const std::vector<Operator>& user_ops, const std::vector<Decision>& decisions,
                 const std::vector<Waiver>& waivers = {}, const PlanOptions& options = {});

// Definitions (by uid) that the patch must drop and recreate, each with the operator
// that makes it necessary.
std::map<DefUid, int> recreated_definitions(const Plan& plan);

}  // namespace dbevo
