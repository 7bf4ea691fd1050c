#include "dbevo/operators.hpp"

#include <algorithm>
#include <array>

namespace dbevo {

namespace {

struct KindName {
  OpKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 34> kKinds{{
    {OpKind::AddTable, "AddTable"},
    {OpKind::RemoveTable, "RemoveTable"},
    {OpKind::RenameTable, "RenameTable"},
    {OpKind::MoveTable, "MoveTable"},
    {OpKind::AddColumn, "AddColumn"},
    {OpKind::RemoveColumn, "RemoveColumn"},
    {OpKind::RenameColumn, "RenameColumn"},
    {OpKind::RetypeColumn, "RetypeColumn"},
    {OpKind::AddConstraint, "AddConstraint"},
    {OpKind::RemoveConstraint, "RemoveConstraint"},
    {OpKind::ModifyCheckConstraint, "ModifyCheckConstraint"},
    {OpKind::AddView, "AddView"},
    {OpKind::RemoveView, "RemoveView"},
    {OpKind::RenameView, "RenameView"},
    {OpKind::MoveView, "MoveView"},
    {OpKind::ModifyViewBody, "ModifyViewBody"},
    {OpKind::RenameReferenceInSelectClause, "RenameReferenceInSelectClause"},
    {OpKind::RenameReferenceInNonSelectClause, "RenameReferenceInNonSelectClause"},
    {OpKind::AliasInSelectClause, "AliasInSelectClause"},
    {OpKind::AddStoredProcedure, "AddStoredProcedure"},
    {OpKind::RemoveStoredProcedure, "RemoveStoredProcedure"},
    {OpKind::RenameStoredProcedure, "RenameStoredProcedure"},
    {OpKind::MoveStoredProcedure, "MoveStoredProcedure"},
    {OpKind::ModifyBody, "ModifyBody"},
    {OpKind::RenameLocalVariable, "RenameLocalVariable"},
    {OpKind::RenameParameter, "RenameParameter"},
    {OpKind::RenameReferenceInStoredProcedure, "RenameReferenceInStoredProcedure"},
    {OpKind::AddTrigger, "AddTrigger"},
    {OpKind::RemoveTrigger, "RemoveTrigger"},
    {OpKind::ModifyTrigger, "ModifyTrigger"},
    {OpKind::RenameReferenceInConstraint, "RenameReferenceInConstraint"},
    {OpKind::Identity, "Identity"},
    {OpKind::DoNothing, "DoNothing"},
    {OpKind::HumanDecision, "HumanDecision"},
}};

}  // namespace

std::string_view to_string(OpKind k) {
  for (const auto& kn : kKinds) {
    if (kn.kind == k) return kn.name;
  }
  return "?";
}

OpKind parse_op_kind(std::string_view s) {
  for (const auto& kn : kKinds) {
    if (kn.name == s) return kn.kind;
  }
  static const std::array<KindName, 5> aliases{{
      {OpKind::AddStoredProcedure, "AddFunction"},
      {OpKind::RemoveStoredProcedure, "RemoveFunction"},
      {OpKind::RenameStoredProcedure, "RenameFunction"},
      {OpKind::MoveStoredProcedure, "MoveFunction"},
      {OpKind::ModifyBody, "ModifyFunctionBody"},
  }};
  for (const auto& kn : aliases) {
    if (kn.name == s) return kn.kind;
  }
  throw Error(ErrorCode::InvalidOperator, "unknown operator kind: " + std::string(s));
}

const std::vector<OpKind>& all_op_kinds() {
  static const std::vector<OpKind> all = [] {
    std::vector<OpKind> v;
    for (const auto& kn : kKinds) v.push_back(kn.kind);
    return v;
  }();
  return all;
}

bool is_reference_oriented(OpKind k) {
  return k == OpKind::RenameReferenceInSelectClause || k == OpKind::RenameReferenceInNonSelectClause ||
         k == OpKind::AliasInSelectClause || k == OpKind::RenameReferenceInStoredProcedure ||
         k == OpKind::RenameReferenceInConstraint;
}

bool is_add(OpKind k) {
  return k == OpKind::AddTable || k == OpKind::AddColumn || k == OpKind::AddConstraint || k == OpKind::AddView ||
         k == OpKind::AddStoredProcedure || k == OpKind::AddTrigger;
}

bool is_remove(OpKind k) {
  return k == OpKind::RemoveTable || k == OpKind::RemoveColumn || k == OpKind::RemoveConstraint ||
         k == OpKind::RemoveView || k == OpKind::RemoveStoredProcedure || k == OpKind::RemoveTrigger;
}

RefAddress address_of(const SchemaModel& m, const Reference& r) {
  return {m.entity(r.owner).path.str(), r.span.start, r.span.end};
}

std::size_t find_reference(const SchemaModel& m, const RefAddress& a) {
  auto owner = m.find(EntityPath::parse(a.owner));
  if (owner) {
    if (auto id = m.reference_at(*owner, {a.start, a.end})) return *id;
  }
  throw Error(ErrorCode::UnknownReference,
              "no reference at " + a.owner + " [" + std::to_string(a.start) + "," + std::to_string(a.end) + ")");
}

nlohmann::json to_json(const RefAddress& a) {
  return nlohmann::json{{"owner", a.owner}, {"start", a.start}, {"end", a.end}};
}

RefAddress ref_address_from_json(const nlohmann::json& j) {
  try {
    RefAddress a;
    a.owner = j.at("owner").get<std::string>();
    if (j.contains("span")) {
      a.start = j.at("span").at("start").get<std::size_t>();
      a.end = j.at("span").at("end").get<std::size_t>();
    } else {
      a.start = j.at("start").get<std::size_t>();
      a.end = j.at("end").get<std::size_t>();
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidOperator, std::string("bad reference address: ") + e.what());
  }
}

std::string Operator::arg(std::string_view key) const {
  if (!args.is_object()) return {};
  auto it = args.find(std::string(key));
  if (it == args.end()) return {};
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

bool Operator::same_effect(const Operator& o) const {
  return kind == o.kind && target == o.target && ref == o.ref && args == o.args;
}

Operator operator_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("op")) throw Error(ErrorCode::InvalidOperator, "operator must be an object with \"op\"");
  Operator op;
  op.kind = parse_op_kind(j.at("op").get<std::string>());
  if (j.contains("target")) {
    const auto& t = j.at("target");
    if (t.is_string()) {
      op.target = t.get<std::string>();
    } else if (t.is_object()) {
      op.ref = ref_address_from_json(t);
    } else {
      throw Error(ErrorCode::InvalidOperator, "target must be a path string or a reference address");
    }
  }
  if (j.contains("reference")) op.ref = ref_address_from_json(j.at("reference"));
  if (j.contains("args")) {
    if (!j.at("args").is_object()) throw Error(ErrorCode::InvalidOperator, "args must be an object");
    op.args = j.at("args");
  }
  if (is_reference_oriented(op.kind) && !op.ref) {
    throw Error(ErrorCode::InvalidOperator, std::string(to_string(op.kind)) + " needs a reference target");
  }
  if (!is_reference_oriented(op.kind) && op.kind != OpKind::DoNothing && op.kind != OpKind::HumanDecision &&
      op.target.empty() && !is_add(op.kind)) {
    throw Error(ErrorCode::InvalidOperator, std::string(to_string(op.kind)) + " needs a target path");
  }
  return op;
}

nlohmann::json to_json(const Operator& op, bool with_provenance) {
  nlohmann::json j;
  j["op"] = to_string(op.kind);
  if (op.ref && (is_reference_oriented(op.kind) || op.target.empty())) {
    j["target"] = to_json(*op.ref);
  } else {
    j["target"] = op.target;
  }
  j["args"] = op.args.is_object() ? op.args : nlohmann::json::object();
  if (with_provenance) {
    j["id"] = op.id;
    j["provenance"] = op.provenance == Provenance::UserStated      ? "UserStated"
                      : op.provenance == Provenance::Recommendation ? "Recommendation"
                                                                    : "Automatic";
    if (op.parent >= 0) j["parent"] = op.parent;
    if (op.ref) j["forReference"] = to_json(*op.ref);
  }
  return j;
}

std::vector<Operator> parse_operator_script(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidOperator, std::string("operator script is not JSON: ") + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::InvalidOperator, "operator script must be a JSON array");
  std::vector<Operator> out;
  for (const auto& item : j) out.push_back(operator_from_json(item));
  return out;
}

std::string describe(const Operator& op) {
  std::string s(to_string(op.kind));
  if (!op.target.empty()) s += " " + op.target;
  if (op.ref) s += " @" + op.ref->owner + "[" + std::to_string(op.ref->start) + "," + std::to_string(op.ref->end) + ")";
  for (const char* k : {"new_name", "namespace", "replacement", "type"}) {
    if (op.has_arg(k)) s += std::string(" ") + k + "=" + op.arg(k);
  }
  return s;
}

}  // namespace dbevo
