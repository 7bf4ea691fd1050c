#include "dbevo/plan.hpp"

#include <algorithm>
#include <deque>
#include <functional>

#include "dbevo/apply.hpp"
#include "dbevo/lexer.hpp"
#include "dbevo/utf8.hpp"

namespace dbevo {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::UserStated: return "UserStated";
    case Provenance::Recommendation: return "Recommendation";
    case Provenance::Automatic: return "Automatic";
  }
  return "?";
}

std::string_view to_string(RefStatus s) {
  switch (s) {
    case RefStatus::Pending: return "pending";
    case RefStatus::Decided: return "decided";
    case RefStatus::Automatic: return "automatic";
    case RefStatus::Subsumed: return "subsumed";
  }
  return "?";
}

namespace {

std::string terminal_name(std::string_view written) {
  std::string last;
  for (const auto& t : tokenize(written)) {
    if (t.is_name()) last = t.value;
  }
  if (last.empty()) throw Error(ErrorCode::InvalidOperator, "no identifier in '" + std::string(written) + "'");
  return last;
}

std::string new_name_of(const Operator& parent) {
  if (parent.kind == OpKind::RenameReferenceInSelectClause) return terminal_name(parent.arg("replacement"));
  return terminal_name(parent.arg("new_name"));
}

Operator reference_op(OpKind kind, const RefAddress& a, nlohmann::json args = nlohmann::json::object()) {
  Operator op;
  op.kind = kind;
  op.ref = a;
  op.args = std::move(args);
  return op;
}

Operator entity_op(OpKind kind, const std::string& target, const RefAddress& a,
                   nlohmann::json args = nlohmann::json::object()) {
  Operator op;
  op.kind = kind;
  op.target = target;
  op.ref = a;
  op.args = std::move(args);
  return op;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// The catalog of candidates. One branch per (operator family, subset label).
std::vector<Operator> candidates(const Operator& parent, const std::string& label, const SchemaModel& m,
                                 const Reference& r) {
  const RefAddress a = address_of(m, r);
  const EntityId owner = m.actionable(r.owner);
  const std::string owner_path = m.entity(owner).path.str();
  const Entity& direct_owner = m.entity(r.owner);
  std::vector<Operator> out;

  auto removal = [&] {
    if (direct_owner.kind == EntityKind::Constraint) {
      out.push_back(entity_op(OpKind::RemoveConstraint, direct_owner.path.str(), a));
    } else if (direct_owner.kind == EntityKind::Trigger) {
      out.push_back(entity_op(OpKind::RemoveTrigger, direct_owner.path.str(), a));
    } else if (r.checked) {
      out.push_back(entity_op(OpKind::RemoveView, owner_path, a));
      out.push_back(entity_op(OpKind::HumanDecision, owner_path, a, {{"suggested", "ModifyViewBody"}}));
    } else {
      out.push_back(entity_op(OpKind::HumanDecision, owner_path, a));
    }
  };

  switch (parent.kind) {
    case OpKind::RetypeColumn:
      out.push_back(reference_op(OpKind::DoNothing, a));
      out.push_back(entity_op(OpKind::HumanDecision, owner_path, a));
      break;
    case OpKind::RenameColumn:
    case OpKind::RenameReferenceInSelectClause:
    case OpKind::RenameParameter:
    case OpKind::RenameLocalVariable: {
      const std::string nn = new_name_of(parent);
      const std::string repl = rename_replacement(m, r, nn);
      if (ends_with(label, ".constraints") || ends_with(label, ".triggers")) {
        out.push_back(reference_op(OpKind::DoNothing, a));
      } else if (ends_with(label, ".viewSelect")) {
        const SelectItem& item = direct_owner.select_items.at(static_cast<std::size_t>(r.select_item));
        out.push_back(reference_op(OpKind::RenameReferenceInSelectClause, a, {{"replacement", repl}}));
        if (item.bare_column && !item.has_alias && item.output_name == m.entity(r.target).name) {
          out.push_back(reference_op(OpKind::AliasInSelectClause, a, {{"replacement", repl}, {"alias", item.output_name}}));
        }
      } else if (ends_with(label, ".viewOther")) {
        out.push_back(reference_op(OpKind::RenameReferenceInNonSelectClause, a, {{"replacement", repl}}));
      } else {
        out.push_back(reference_op(OpKind::RenameReferenceInStoredProcedure, a, {{"replacement", repl}}));
      }
      break;
    }
    case OpKind::RenameTable:
    case OpKind::RenameView:
    case OpKind::RenameStoredProcedure:
      if (r.checked) {
        out.push_back(reference_op(OpKind::DoNothing, a));
      } else {
        out.push_back(reference_op(OpKind::RenameReferenceInStoredProcedure, a,
                                   {{"replacement", rename_replacement(m, r, new_name_of(parent))}}));
      }
      break;
    case OpKind::MoveTable:
    case OpKind::MoveView:
    case OpKind::MoveStoredProcedure:
      if (r.checked || r.via_source) {
        out.push_back(reference_op(OpKind::DoNothing, a));
      } else {
        out.push_back(reference_op(OpKind::RenameReferenceInStoredProcedure, a,
                                   {{"replacement", move_replacement(m, r, terminal_name(parent.arg("namespace")), true)}}));
      }
      break;
    case OpKind::RemoveColumn:
    case OpKind::RemoveTable:
    case OpKind::RemoveView:
    case OpKind::RemoveStoredProcedure:
      removal();
      break;
    default:
      throw Error(ErrorCode::NoSchemeForOperator, "no recommendations for " + std::string(to_string(parent.kind)));
  }
  return out;
}

std::string candidate_target(const Operator& op) { return op.target.empty() && op.ref ? op.ref->owner : op.target; }

}  // namespace

std::vector<Recommendation> recommendations_for(const Operator& parent, const std::string& label, const SchemaModel& m,
                                                const Reference& r) {
  auto ops = candidates(parent, label, m, r);
  std::sort(ops.begin(), ops.end(), [](const Operator& a, const Operator& b) {
    auto ka = to_string(a.kind), kb = to_string(b.kind);
    return ka != kb ? ka < kb : candidate_target(a) < candidate_target(b);
  });
  std::vector<Recommendation> out;
  for (auto& op : ops) {
    op.provenance = Provenance::Recommendation;
    op.parent = parent.id;
    Recommendation rec;
    rec.id = static_cast<int>(out.size());
    rec.for_reference = address_of(m, r);
    rec.description = describe(op);
    rec.candidate = std::move(op);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<Recommendation> recommendations_for(const Operator& parent, const CoherentSubset& subset,
                                                const SchemaModel& m) {
  std::vector<Recommendation> out;
  for (std::size_t id : subset.references) {
    auto recs = recommendations_for(parent, subset.label, m, m.reference(id));
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

nlohmann::json to_json(const Decision& d) {
  nlohmann::json j{{"reference", to_json(d.reference)}, {"chosen", to_string(d.chosen)}};
  if (d.replacement) j["operator"] = to_json(*d.replacement);
  return j;
}

Decision decision_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("reference") || !j.contains("chosen")) {
    throw Error(ErrorCode::InvalidOperator, "a decision needs \"reference\" and \"chosen\"");
  }
  Decision d;
  d.reference = ref_address_from_json(j.at("reference"));
  if (!j.at("chosen").is_string()) throw Error(ErrorCode::InvalidOperator, "\"chosen\" must be an operator kind");
  d.chosen = parse_op_kind(j.at("chosen").get<std::string>());
  if (j.contains("operator")) d.replacement = operator_from_json(j.at("operator"));
  return d;
}

nlohmann::json decision_log_to_json(const std::vector<Decision>& log) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : log) arr.push_back(to_json(d));
  return arr;
}

std::vector<Decision> decision_log_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidOperator, "a decision log must be a JSON array");
  std::vector<Decision> out;
  for (const auto& d : j) out.push_back(decision_from_json(d));
  return out;
}

std::size_t Plan::pending() const {
  return static_cast<std::size_t>(
      std::count_if(refs.begin(), refs.end(), [](const ImpactedReference& r) { return r.status == RefStatus::Pending; }));
}

std::vector<int> Plan::unresolved_human_decisions() const {
  std::vector<int> out;
  for (const auto& n : nodes) {
    if (n.op.kind == OpKind::HumanDecision && !n.waived) out.push_back(n.op.id);
  }
  return out;
}

int Plan::depth() const {
  std::function<int(int)> d = [&](int id) {
    int best = 0;
    for (int c : nodes[static_cast<std::size_t>(id)].children) best = std::max(best, d(c));
    return best + 1;
  };
  int out = 0;
  for (int r : roots) out = std::max(out, d(r));
  return out;
}

nlohmann::json Plan::tree_json() const {
  nlohmann::json jn = nlohmann::json::array();
  for (const auto& n : nodes) {
    nlohmann::json o = to_json(n.op, true);
    o["children"] = n.children;
    o["impacted"] = n.impacted;
    o["root"] = n.root;
    o["actionable"] = n.actionable;
    if (n.for_ref >= 0) o["forReferenceIndex"] = n.for_ref;
    if (n.op.kind == OpKind::HumanDecision) o["waived"] = n.waived;
    jn.push_back(std::move(o));
  }
  nlohmann::json jr = nlohmann::json::array();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& r = refs[i];
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : r.candidates) {
      cands.push_back({{"id", c.id}, {"operator", to_json(c.candidate)}, {"description", c.description}});
    }
    nlohmann::json o{{"index", i},
                     {"address", to_json(r.address)},
                     {"operator", r.op_id},
                     {"root", r.root},
                     {"subset", r.label},
                     {"kind", to_string(r.kind)},
                     {"target", r.target},
                     {"actionable", r.actionable},
                     {"text", r.text},
                     {"checked", r.checked},
                     {"status", to_string(r.status)},
                     {"candidates", cands}};
    if (r.chosen_op >= 0) o["chosen"] = r.chosen_op;
    jr.push_back(std::move(o));
  }
  nlohmann::json unresolved = unresolved_human_decisions();
  return {{"roots", roots}, {"nodes", jn},       {"references", jr},          {"pending", pending()},
          {"closed", closed()}, {"depth", depth()}, {"unresolvedHumanDecisions", unresolved}};
}

namespace {

// Uid of the definition created by an Add operator: the first fresh uid of the right kind.
DefUid created_uid(const Catalog& cat, DefUid first_fresh, OpKind kind) {
  auto pick = [&](const auto& defs) -> DefUid {
    for (const auto& d : defs)
      if (d.uid >= first_fresh) return d.uid;
    return 0;
  };
  switch (kind) {
    case OpKind::AddTable: return pick(cat.tables);
    case OpKind::AddView: return pick(cat.views);
    case OpKind::AddStoredProcedure: return pick(cat.functions);
    case OpKind::AddTrigger: return pick(cat.triggers);
    default: return 0;
  }
}

// Entity-oriented operators with the same effect, whichever reference they were chosen for.
bool same_entity_effect(const Operator& a, const Operator& b) {
  return a.kind == b.kind && a.target == b.target && a.args == b.args;
}

bool is_entity_edit(OpKind k) {
  return !is_reference_oriented(k) && k != OpKind::DoNothing && k != OpKind::HumanDecision && k != OpKind::Identity;
}

class Deriver {
 public:
  Deriver(const SchemaModel& base, const std::vector<Decision>& decisions, const std::vector<Waiver>& waivers,
          const PlanOptions& options)
      : decisions_(decisions), used_(decisions.size(), false), waivers_(waivers), options_(options) {
    plan_.base = base;
    plan_.states.push_back(base);
  }

  Plan run(const std::vector<Operator>& user_ops) {
    for (std::size_t i = 0; i < user_ops.size(); ++i) {
      PlanNode n;
      n.op = user_ops[i];
      n.op.id = static_cast<int>(i);
      n.op.parent = -1;
      n.op.provenance = Provenance::UserStated;
      n.root = static_cast<int>(i);
      plan_.nodes.push_back(std::move(n));
      plan_.roots.push_back(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < user_ops.size(); ++i) {
      SchemaModel state = plan_.states.back();
      auto subtree = expand_root(static_cast<int>(i), state);
      plan_.states.push_back(fold(state, subtree));
    }
    for (std::size_t k = 0; k < decisions_.size(); ++k) {
      if (!used_[k]) plan_.unused_decisions.push_back(decisions_[k]);
    }
    inject_identities();
    return std::move(plan_);
  }

 private:
  PlanNode& node(int id) { return plan_.nodes[static_cast<std::size_t>(id)]; }

  std::optional<DefUid> uid_of_target(const SchemaModel& m, const Operator& op) {
    if (op.target.empty() || is_add(op.kind)) return std::nullopt;
    auto id = m.find(EntityPath::parse(op.target));
    if (!id) return std::nullopt;
    return m.entity(*id).def_uid;
  }

  void locate(int id, const SchemaModel& m) {
    PlanNode& n = node(id);
    const Operator& op = n.op;
    if (is_add(op.kind) && op.kind != OpKind::AddColumn && op.kind != OpKind::AddConstraint) return;
    if (op.target.empty() && !op.ref) return;
    try {
      EntityId target = op.target.empty() ? m.reference(find_reference(m, *op.ref)).owner : operator_target(m, op);
      EntityId act = actionable_entity(m, op);
      n.target_uid = m.entity(target).def_uid;
      n.actionable_uid = m.entity(act).def_uid;
      n.actionable = m.entity(act).path.str();
    } catch (const Error& e) {
      bool missing = e.code() == ErrorCode::UnknownEntity || e.code() == ErrorCode::UnknownReference;
      if (missing && n.op.parent < 0 && n.root > 0 && !op.target.empty() &&
          plan_.base.find(EntityPath::parse(op.target))) {
        throw Error(ErrorCode::ContradictoryOperators,
                    "operator #" + std::to_string(id) + " (" + describe(op) + ") targets an entity changed by an earlier operator");
      }
      throw;
    }
  }

  bool waived(const SchemaModel& m, const PlanNode& n) {
    if (n.op.kind != OpKind::HumanDecision) return false;
    for (const auto& w : waivers_) {
      auto id = m.find(EntityPath::parse(w.target));
      if (id && m.entity(*id).path.str() == n.actionable) return true;
      if (w.target == n.actionable) return true;
    }
    return false;
  }

  std::optional<std::size_t> match_decision(const RefAddress& a, const std::vector<Recommendation>& cands) {
    for (std::size_t k = 0; k < decisions_.size(); ++k) {
      if (used_[k] || !(decisions_[k].reference == a)) continue;
      for (const auto& c : cands) {
        if (c.candidate.kind == decisions_[k].chosen) return k;
      }
    }
    return std::nullopt;
  }

  std::vector<int> expand_root(int root, const SchemaModel& m) {
    std::set<DefUid> removed;
    for (std::size_t j = static_cast<std::size_t>(root); j < plan_.roots.size(); ++j) {
      const Operator& op = node(static_cast<int>(j)).op;
      if (!is_remove(op.kind)) continue;
      if (auto uid = uid_of_target(m, op)) removed.insert(*uid);
    }

    std::vector<int> order;
    std::deque<int> queue{root};
    const std::size_t first_ref = plan_.refs.size();
    while (!queue.empty()) {
      int id = queue.front();
      queue.pop_front();
      order.push_back(id);
      locate(id, m);
      node(id).waived = waived(m, node(id));
      Operator op = node(id).op;
      // a second choice of the same entity change adds no impact of its own
      bool repeated = std::any_of(order.begin(), order.end() - 1, [&](int prev) {
        return is_entity_edit(op.kind) && same_entity_effect(node(prev).op, op);
      });
      if (repeated) continue;
      auto impact = potential_impact(op, m, removed);
      for (const auto& subset : coherent_subsets(op, m, impact)) {
        for (std::size_t rid : subset.references) {
          const Reference& r = m.reference(rid);
          ImpactedReference ir;
          ir.address = address_of(m, r);
          ir.op_id = id;
          ir.root = root;
          ir.label = subset.label;
          ir.kind = r.kind;
          ir.target = m.entity(r.target).path.str();
          ir.actionable = m.entity(m.actionable(r.owner)).path.str();
          ir.text = utf8::substr(m.entity(r.root).source_text, r.span);
          ir.checked = r.checked;
          ir.candidates = recommendations_for(op, subset.label, m, r);

          std::optional<Operator> child;
          if (auto k = match_decision(ir.address, ir.candidates)) {
            used_[*k] = true;
            const Decision& d = decisions_[*k];
            if (d.replacement) {
              child = *d.replacement;
            } else {
              for (const auto& c : ir.candidates)
                if (c.candidate.kind == d.chosen) child = c.candidate;
            }
            child->provenance = Provenance::Recommendation;
            ir.status = RefStatus::Decided;
          } else if (options_.auto_accept_single && ir.candidates.size() == 1 &&
                     ir.candidates[0].candidate.kind != OpKind::HumanDecision) {
            child = ir.candidates[0].candidate;
            child->provenance = Provenance::Automatic;
            ir.status = RefStatus::Automatic;
          }
          std::size_t ref_index = plan_.refs.size();
          if (child) {
            PlanNode cn;
            cn.op = *child;
            cn.op.id = static_cast<int>(plan_.nodes.size());
            cn.op.parent = id;
            if (!cn.op.ref) cn.op.ref = ir.address;
            cn.root = root;
            cn.for_ref = static_cast<int>(ref_index);
            ir.chosen_op = cn.op.id;
            node(id).children.push_back(cn.op.id);
            queue.push_back(cn.op.id);
            plan_.nodes.push_back(std::move(cn));
          }
          node(id).impacted.push_back(ref_index);
          plan_.refs.push_back(std::move(ir));
        }
      }
    }

    // Undecided references inside definitions that chosen operators remove need no decision.
    std::set<DefUid> dropped;
    for (int id : order) {
      const PlanNode& n = node(id);
      if (n.op.parent >= 0 && is_remove(n.op.kind) && n.target_uid) dropped.insert(n.target_uid);
    }
    for (std::size_t i = first_ref; i < plan_.refs.size(); ++i) {
      auto& ir = plan_.refs[i];
      if (ir.status != RefStatus::Pending) continue;
      if (owned_within(m, m.reference(find_reference(m, ir.address)), dropped)) ir.status = RefStatus::Subsumed;
    }
    return order;
  }

  SchemaModel fold(const SchemaModel& m, const std::vector<int>& subtree) {
    std::vector<Splice> splices;
    for (int id : subtree) {
      const Operator& op = node(id).op;
      if (is_reference_oriented(op.kind)) {
        auto s = reference_splices(m, op);
        splices.insert(splices.end(), s.begin(), s.end());
      }
    }
    SchemaModel cur = m;
    if (!splices.empty()) {
      Catalog cat = m.catalog();
      apply_splices(cat, m, std::move(splices));
      cur = analyze(std::move(cat));
    }

    // post-order: consequences before their causes
    std::vector<int> post;
    std::function<void(int)> visit = [&](int id) {
      for (int c : node(id).children) visit(c);
      post.push_back(id);
    };
    visit(subtree.front());
    std::vector<const Operator*> applied;
    for (int id : post) {
      PlanNode& n = node(id);
      if (!is_entity_edit(n.op.kind)) continue;
      bool dup = std::any_of(applied.begin(), applied.end(), [&](const Operator* o) { return same_entity_effect(*o, n.op); });
      if (dup) continue;
      DefUid fresh = cur.catalog().next_uid;
      Catalog next = apply_operator(cur, n.op, ApplyOptions{false});
      if (is_add(n.op.kind) && n.op.kind != OpKind::AddColumn && n.op.kind != OpKind::AddConstraint) {
        n.actionable_uid = n.target_uid = created_uid(next, fresh, n.op.kind);
      }
      cur = analyze(std::move(next));
      if (is_add(n.op.kind) && n.actionable_uid) {
        if (auto e = cur.by_uid(n.actionable_uid)) n.actionable = cur.entity(*e).path.str();
      }
      applied.push_back(&n.op);
    }
    return cur;
  }

  void inject_identities() {
    auto recreated = recreated_definitions(plan_);
    for (const auto& [uid, cause] : recreated) {
      bool own = std::any_of(plan_.nodes.begin(), plan_.nodes.end(), [&](const PlanNode& n) {
        return n.actionable_uid == uid && n.op.kind != OpKind::DoNothing;
      });
      if (own) continue;
      int root = node(cause).root;
      const SchemaModel& at = plan_.states[static_cast<std::size_t>(root)];
      auto e = at.by_uid(uid);
      if (!e) continue;
      PlanNode n;
      n.op.kind = OpKind::Identity;
      n.op.id = static_cast<int>(plan_.nodes.size());
      n.op.target = at.entity(*e).path.str();
      n.op.parent = cause;
      n.op.provenance = Provenance::Automatic;
      n.root = root;
      n.target_uid = n.actionable_uid = uid;
      n.actionable = n.op.target;
      node(cause).children.push_back(n.op.id);
      plan_.nodes.push_back(std::move(n));
    }
  }

  Plan plan_;
  const std::vector<Decision>& decisions_;
  std::vector<bool> used_;
  const std::vector<Waiver>& waivers_;
  PlanOptions options_;
};

std::vector<std::string> column_names(const SchemaModel& m, EntityId relation) {
  std::vector<std::string> out;
  for (EntityId c : m.columns_of(relation)) out.push_back(m.entity(c).name);
  return out;
}

}  // namespace

Plan derive_plan(const SchemaModel& base, const std::vector<Operator>& user_ops, const std::vector<Decision>& decisions,
                 const std::vector<Waiver>& waivers, const PlanOptions& options) {
  return Deriver(base, decisions, waivers, options).run(user_ops);
}

std::map<DefUid, int> recreated_definitions(const Plan& plan) {
  const SchemaModel& base = plan.base;
  const SchemaModel& fin = plan.final_model();
  std::map<DefUid, int> out;
  const int fallback = plan.roots.empty() ? -1 : plan.roots.front();
  if (fallback < 0) return out;

  auto cause_for = [&](DefUid uid) {
    for (const auto& n : plan.nodes) {
      if (n.op.kind != OpKind::DoNothing && (n.actionable_uid == uid || n.target_uid == uid)) return n.op.id;
    }
    return fallback;
  };
  // nearest enclosing definition addressed by an operator
  auto cause_in = [&](EntityId e) {
    for (; e != kNoEntity; e = base.entity(e).container) {
      DefUid uid = base.entity(e).def_uid;
      if (!uid) continue;
      for (const auto& n : plan.nodes)
        if (n.op.kind != OpKind::DoNothing && n.target_uid == uid) return n.op.id;
    }
    return fallback;
  };
  auto survives = [&](DefUid uid) { return fin.by_uid(uid).has_value(); };

  for (const auto& n : plan.nodes) {
    if ((n.op.kind == OpKind::Identity || n.op.kind == OpKind::ModifyTrigger) && n.actionable_uid) {
      out.emplace(n.actionable_uid, n.op.kind == OpKind::Identity ? n.op.parent : n.op.id);
    }
  }
  for (const auto& e : base.entities()) {
    if (!e.def_uid || !survives(e.def_uid)) continue;
    const Entity& f = fin.entity(*fin.by_uid(e.def_uid));
    if (e.kind == EntityKind::View) {
      // CREATE OR REPLACE VIEW may only append output columns
      auto before = column_names(base, e.id);
      auto after = column_names(fin, f.id);
      if (after.size() < before.size() || !std::equal(before.begin(), before.end(), after.begin())) {
        out.emplace(e.def_uid, cause_for(e.def_uid));
      }
    } else if (e.kind == EntityKind::StoredProcedure) {
      const FunctionDef* a = base.catalog().function(e.def_uid);
      const FunctionDef* b = fin.catalog().function(e.def_uid);
      bool same = a->returns == b->returns && a->params.size() == b->params.size();
      for (std::size_t i = 0; same && i < a->params.size(); ++i) {
        same = a->params[i].name == b->params[i].name && a->params[i].mode == b->params[i].mode &&
               normalize_type(a->params[i].type) == normalize_type(b->params[i].type);
      }
      if (!same) out.emplace(e.def_uid, cause_for(e.def_uid));
    }
  }
  // checked referencers of removed or retyped definitions are rebuilt around the change
  for (const auto& r : base.references()) {
    if (!r.resolved || !r.checked) continue;
    EntityId act = base.actionable(r.owner);
    const Entity& owner = base.entity(act);
    if (owner.kind != EntityKind::View && owner.kind != EntityKind::Trigger) continue;
    if (!survives(owner.def_uid)) continue;
    const Entity& t = base.entity(r.target);
    bool gone = t.def_uid && !survives(t.def_uid);
    bool retyped = false;
    if (!gone && t.kind == EntityKind::Column && base.entity(t.container).kind == EntityKind::Table) {
      const Entity& ft = fin.entity(*fin.by_uid(t.def_uid));
      retyped = normalize_type(ft.declared_type) != normalize_type(t.declared_type);
    }
    if (gone || retyped) out.emplace(owner.def_uid, cause_in(r.target));
  }
  // closure over the pre-state dependency graph
  DependencyGraph g = dependency_graph(base);
  std::map<DefUid, int> dropped = out;
  for (const auto& node : g.nodes) {
    if (!survives(node.uid)) dropped.emplace(node.uid, cause_for(node.uid));
  }
  std::deque<DefUid> work;
  for (const auto& [uid, c] : dropped) work.push_back(uid);
  while (!work.empty()) {
    DefUid x = work.front();
    work.pop_front();
    auto xi = g.node_of_uid(x);
    if (!xi) continue;
    for (const auto& edge : g.edges) {
      if (edge.to != *xi) continue;
      const auto& from = g.nodes[edge.from];
      if (from.kind != EntityKind::View && from.kind != EntityKind::Trigger) continue;
      if (!survives(from.uid) || dropped.contains(from.uid)) continue;
      dropped.emplace(from.uid, dropped.at(x));
      out.emplace(from.uid, dropped.at(x));
      work.push_back(from.uid);
    }
  }
  return out;
}

}  // namespace dbevo
