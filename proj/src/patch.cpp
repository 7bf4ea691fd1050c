#include "dbevo/patch.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "dbevo/apply.hpp"
#include "dbevo/ddl.hpp"

namespace dbevo {

std::string_view to_string(PatchPhase p) {
  switch (p) {
    case PatchPhase::CreateSchema: return "createSchema";
    case PatchPhase::Drop: return "drop";
    case PatchPhase::Unchecked: return "unchecked";
    case PatchPhase::Main: return "main";
  }
  return "?";
}

std::string SqlPatch::text() const {
  std::string out = "BEGIN;\n";
  for (std::size_t i = 0; i < commands.size(); ++i) {
    // drops form one block; every other command stands apart
    bool drop_run = commands[i].phase == PatchPhase::Drop && i > 0 && commands[i - 1].phase == PatchPhase::Drop;
    if (i > 0 && !drop_run) out += "\n";
    out += commands[i].sql + "\n";
  }
  out += commit ? "COMMIT;\n" : "ROLLBACK;\n";
  return out;
}

nlohmann::json SqlPatch::provenance_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : commands) {
    arr.push_back({{"sql", c.sql}, {"phase", to_string(c.phase)}, {"entity", c.entity}, {"operators", c.operators}});
  }
  return arr;
}

namespace {

PathSegment segment(std::string name) {
  PathSegment s;
  s.name = std::move(name);
  return s;
}

// Checked dependencies between graph nodes, keyed by definition uid.
struct OrderGraph {
  std::map<DefUid, std::string> path;
  std::map<DefUid, std::set<DefUid>> deps;
};

OrderGraph order_graph(const SchemaModel& m) {
  OrderGraph g;
  for (const auto& e : m.entities()) {
    bool node = e.kind == EntityKind::Table || e.kind == EntityKind::View || e.kind == EntityKind::StoredProcedure ||
                e.kind == EntityKind::Trigger || e.fk_node;
    if (node) g.path[e.def_uid] = e.path.str();
  }
  for (const auto& r : m.references()) {
    if (!r.resolved || !r.checked || r.target == kNoEntity) continue;
    EntityId from = m.graph_node(r.owner);
    EntityId to = m.graph_node(r.target);
    if (from == kNoEntity || to == kNoEntity || from == to) continue;
    g.deps[m.entity(from).def_uid].insert(m.entity(to).def_uid);
  }
  return g;
}

// Kahn's algorithm; the smallest path among ready nodes goes first.
std::vector<DefUid> topological(const OrderGraph& g, bool dependents_first) {
  std::map<DefUid, std::size_t> blocking;
  std::map<DefUid, std::vector<DefUid>> unblocks;
  for (const auto& [uid, p] : g.path) blocking[uid] = 0;
  for (const auto& [from, tos] : g.deps) {
    for (DefUid to : tos) {
      if (dependents_first) {
        ++blocking[to];
        unblocks[from].push_back(to);
      } else {
        ++blocking[from];
        unblocks[to].push_back(from);
      }
    }
  }
  std::set<std::pair<std::string, DefUid>> ready;
  for (const auto& [uid, n] : blocking)
    if (n == 0) ready.insert({g.path.at(uid), uid});
  std::vector<DefUid> out;
  while (!ready.empty()) {
    auto [p, uid] = *ready.begin();
    ready.erase(ready.begin());
    out.push_back(uid);
    for (DefUid next : unblocks[uid]) {
      if (--blocking[next] == 0) ready.insert({g.path.at(next), next});
    }
  }
  if (out.size() != g.path.size()) throw Error(ErrorCode::CycleDetected, "the dependency graph has a cycle");
  return out;
}

bool is_rename(OpKind k) {
  return k == OpKind::RenameTable || k == OpKind::RenameView || k == OpKind::RenameColumn ||
         k == OpKind::RenameStoredProcedure || k == OpKind::RenameParameter || k == OpKind::RenameLocalVariable;
}

bool is_move(OpKind k) {
  return k == OpKind::MoveTable || k == OpKind::MoveView || k == OpKind::MoveStoredProcedure;
}

void reject_contradictions(const Plan& plan) {
  std::map<std::tuple<int, DefUid, bool>, const PlanNode*> seen;
  for (const auto& n : plan.nodes) {
    bool rename = is_rename(n.op.kind);
    if (!n.target_uid || (!rename && !is_move(n.op.kind))) continue;
    auto key = std::make_tuple(n.root, n.target_uid, rename);
    auto [it, fresh] = seen.emplace(key, &n);
    if (fresh) continue;
    const char* arg = rename ? "new_name" : "namespace";
    if (fold_identifier(it->second->op.arg(arg)) != fold_identifier(n.op.arg(arg))) {
      throw Error(ErrorCode::ContradictoryOperators, "operators #" + std::to_string(it->second->op.id) + " and #" +
                                                         std::to_string(n.op.id) + " give " + n.actionable +
                                                         " different " + (rename ? "names" : "namespaces"));
    }
  }
}

std::string alter_table(const std::string& name, const std::string& action) {
  return "ALTER TABLE " + name + "\n  " + action + ";";
}

std::set<DefUid> fk_nodes(const SchemaModel& m) {
  std::set<DefUid> out;
  for (const auto& e : m.entities())
    if (e.fk_node) out.insert(e.def_uid);
  return out;
}

class Builder {
 public:
  explicit Builder(const Plan& plan)
      : plan_(plan), base_(plan.base), fin_(plan.final_model()), bc_(base_.catalog()), fc_(fin_.catalog()),
        recreated_(recreated_definitions(plan)), base_fk_(fk_nodes(base_)), fin_fk_(fk_nodes(fin_)) {
    for (const auto& n : plan.nodes) {
      OpKind k = n.op.kind;
      if (k == OpKind::ModifyViewBody || k == OpKind::AliasInSelectClause ||
          k == OpKind::RenameReferenceInSelectClause || k == OpKind::RenameReferenceInNonSelectClause) {
        explicit_views_.insert(n.actionable_uid);
      }
      if (k == OpKind::ModifyCheckConstraint || k == OpKind::RenameReferenceInConstraint) {
        DefUid uid = constraint_uid(n);
        if (uid) explicit_constraints_.insert(uid);
      }
    }
  }

  SqlPatch build(const PatchOptions& options) {
    SqlPatch patch;
    patch.commit = options.commit;
    for (const auto& ns : fc_.namespaces) {
      if (!bc_.has_namespace(ns)) {
        patch.commands.push_back({"CREATE SCHEMA " + quote_identifier(ns) + ";", PatchPhase::CreateSchema, ns, {}});
      }
    }
    collect_tables();
    collect_views();
    collect_functions();
    collect_triggers();

    for (DefUid uid : topological(order_graph(base_), true)) append(patch, drops_, uid);
    for (auto& [p, cmd] : unchecked_) patch.commands.push_back(std::move(cmd));
    for (DefUid uid : topological(order_graph(fin_), false)) append(patch, mains_, uid);
    return patch;
  }

 private:
  // RenameReferenceInConstraint names the reference; ModifyCheckConstraint the constraint.
  DefUid constraint_uid(const PlanNode& n) const {
    const SchemaModel& at = plan_.states[static_cast<std::size_t>(n.root)];
    EntityId e = kNoEntity;
    if (n.op.ref) {
      e = at.reference(find_reference(at, *n.op.ref)).owner;
    } else if (auto id = at.find(EntityPath::parse(n.op.target))) {
      e = *id;
    }
    for (; e != kNoEntity; e = at.entity(e).container) {
      if (at.entity(e).kind == EntityKind::Constraint) return at.entity(e).def_uid;
    }
    return 0;
  }

  std::vector<int> operators_for(DefUid uid) const {
    std::vector<int> out;
    for (const auto& n : plan_.nodes) {
      if (n.op.kind == OpKind::DoNothing) continue;
      if (n.actionable_uid == uid || n.target_uid == uid) out.push_back(n.op.id);
    }
    if (auto it = recreated_.find(uid); it != recreated_.end() && !std::count(out.begin(), out.end(), it->second)) {
      out.push_back(it->second);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  void drop(DefUid key, const std::string& entity, std::string sql) {
    drops_[key].push_back({std::move(sql), PatchPhase::Drop, entity, operators_for(key)});
  }
  void main(DefUid key, const std::string& entity, std::string sql) {
    mains_[key].push_back({std::move(sql), PatchPhase::Main, entity, operators_for(key)});
  }

  static void append(SqlPatch& patch, std::map<DefUid, std::vector<SqlCommand>>& from, DefUid uid) {
    auto it = from.find(uid);
    if (it == from.end()) return;
    for (auto& c : it->second) patch.commands.push_back(std::move(c));
    from.erase(it);
  }

  static std::string path_of(std::string_view ns, std::string_view name) {
    return EntityPath({segment(std::string(ns)), segment(std::string(name))}).str();
  }

  bool recreated(DefUid uid) const { return recreated_.contains(uid); }

  void collect_tables() {
    for (const auto& b : bc_.tables) {
      const TableDef* f = fc_.table(b.uid);
      std::string bname = render_qualified(b.ns, b.name);
      if (!f) {
        drop(b.uid, path_of(b.ns, b.name), "DROP TABLE " + bname + " RESTRICT;");
        continue;
      }
      // drop phase: vanished constraints, then vanished columns
      auto column_gone = [&](const std::string& col) {
        const ColumnDef* c = b.find_column(col);
        return c && !column_uid_in(*f, c->uid);
      };
      for (const auto& k : b.constraints) {
        if (has_constraint(*f, k.uid)) continue;
        bool own_column = (k.kind == ConstraintKind::NotNull || k.kind == ConstraintKind::Default) &&
                          k.columns.size() == 1 && column_gone(k.columns[0]);
        if (own_column) continue;
        DefUid key = base_fk_.contains(k.uid) ? k.uid : b.uid;
        drop(key, path_of(b.ns, b.name), alter_table(bname, render_constraint_drop(k) + drop_behaviour(k)));
      }
      for (const auto& c : b.columns) {
        if (column_uid_in(*f, c.uid)) continue;
        drop(b.uid, path_of(b.ns, b.name), alter_table(bname, "DROP COLUMN " + quote_identifier(c.name) + " RESTRICT"));
      }
      main_table_changes(b, *f);
    }
    for (const auto& f : fc_.tables) {
      if (bc_.table(f.uid)) continue;
      TableDef inline_part = f;
      std::erase_if(inline_part.constraints, [&](const ConstraintDef& k) { return fin_fk_.contains(k.uid); });
      main(f.uid, path_of(f.ns, f.name), render_create_table(inline_part));
      for (const auto& k : f.constraints) {
        if (fin_fk_.contains(k.uid)) {
          main(k.uid, path_of(f.ns, f.name),
               alter_table(render_qualified(f.ns, f.name), render_constraint(k, f.ns).text));
        }
      }
    }
  }

  static std::string drop_behaviour(const ConstraintDef& k) {
    return k.kind == ConstraintKind::NotNull || k.kind == ConstraintKind::Default ? "" : " RESTRICT";
  }
  static bool has_constraint(const TableDef& t, DefUid uid) {
    return std::any_of(t.constraints.begin(), t.constraints.end(), [&](const ConstraintDef& k) { return k.uid == uid; });
  }
  static bool column_uid_in(const TableDef& t, DefUid uid) {
    return std::any_of(t.columns.begin(), t.columns.end(), [&](const ColumnDef& c) { return c.uid == uid; });
  }
  static const ColumnDef* column_by_uid(const TableDef& t, DefUid uid) {
    for (const auto& c : t.columns)
      if (c.uid == uid) return &c;
    return nullptr;
  }

  void main_table_changes(const TableDef& b, const TableDef& f) {
    std::string ns = b.ns, name = b.name;
    auto cur = [&] { return render_qualified(ns, name); };
    auto emit = [&](const std::string& action) { main(b.uid, path_of(ns, name), alter_table(cur(), action)); };
    if (f.name != b.name) {
      emit("RENAME TO " + quote_identifier(f.name));
      name = f.name;
    }
    if (f.ns != b.ns) {
      emit("SET SCHEMA " + quote_identifier(f.ns));
      ns = f.ns;
    }
    // current column names, to refuse renames onto a name still in use
    std::map<DefUid, std::string> names;
    for (const auto& c : b.columns)
      if (column_uid_in(f, c.uid)) names[c.uid] = c.name;
    for (const auto& c : f.columns) {
      auto it = names.find(c.uid);
      if (it == names.end() || it->second == c.name) continue;
      for (const auto& [uid, n] : names) {
        if (uid != c.uid && n == c.name) {
          throw Error(ErrorCode::ContradictoryOperators,
                      "column " + c.name + " of " + path_of(f.ns, f.name) + " is renamed while the name is in use");
        }
      }
      emit("RENAME COLUMN " + quote_identifier(it->second) + " TO " + quote_identifier(c.name));
      it->second = c.name;
    }
    for (const auto& c : f.columns) {
      const ColumnDef* old = column_by_uid(b, c.uid);
      if (old && normalize_type(old->type) != normalize_type(c.type)) {
        emit("ALTER COLUMN " + quote_identifier(c.name) + " TYPE " + c.type);
      }
    }
    std::set<DefUid> consumed;
    for (const auto& c : f.columns) {
      if (column_by_uid(b, c.uid)) continue;
      std::string def = "ADD COLUMN " + quote_identifier(c.name) + " " + c.type;
      for (const auto& k : f.constraints) {
        if (has_constraint(b, k.uid) || k.columns.size() != 1 || k.columns[0] != c.name) continue;
        if (k.kind == ConstraintKind::NotNull) def += " NOT NULL";
        if (k.kind == ConstraintKind::Default) def += " DEFAULT " + k.expression;
        if (k.kind == ConstraintKind::NotNull || k.kind == ConstraintKind::Default) consumed.insert(k.uid);
      }
      emit(def);
    }
    for (const auto& k : f.constraints) {
      if (consumed.contains(k.uid)) continue;
      bool fk = fin_fk_.contains(k.uid);
      bool added = !has_constraint(b, k.uid);
      bool changed = !added && explicit_constraints_.contains(k.uid);
      if (!added && !changed) continue;
      std::string action = render_constraint(k, f.ns).text;
      if (changed) {
        if (k.kind == ConstraintKind::NotNull) continue;
        if (k.kind != ConstraintKind::Default) action = render_constraint_drop(k) + ",\n  " + action;
      }
      if (fk) {
        main(k.uid, path_of(f.ns, f.name), alter_table(render_qualified(f.ns, f.name), action));
      } else {
        emit(action);
      }
    }
  }

  void collect_views() {
    for (const auto& b : bc_.views) {
      const ViewDef* f = fc_.view(b.uid);
      std::string bname = render_qualified(b.ns, b.name);
      if (!f || recreated(b.uid)) drop(b.uid, path_of(b.ns, b.name), "DROP VIEW " + bname + " RESTRICT;");
      if (!f) continue;
      if (recreated(b.uid)) {
        main(b.uid, path_of(f->ns, f->name), render_create_view(*f, false));
        continue;
      }
      std::string ns = b.ns, name = b.name;
      if (f->name != b.name) {
        main(b.uid, path_of(ns, name),
             "ALTER VIEW " + render_qualified(ns, name) + "\n  RENAME TO " + quote_identifier(f->name) + ";");
        name = f->name;
      }
      if (f->ns != b.ns) {
        main(b.uid, path_of(ns, name),
             "ALTER VIEW " + render_qualified(ns, name) + "\n  SET SCHEMA " + quote_identifier(f->ns) + ";");
        ns = f->ns;
      }
      if (explicit_views_.contains(b.uid) && f->query != b.query) {
        main(b.uid, path_of(ns, name), render_create_view(*f, true));
      }
    }
    for (const auto& f : fc_.views) {
      if (!bc_.view(f.uid)) main(f.uid, path_of(f.ns, f.name), render_create_view(f, false));
    }
  }

  void collect_functions() {
    for (const auto& b : bc_.functions) {
      const FunctionDef* f = fc_.function(b.uid);
      std::string path = base_.entity(*base_.by_uid(b.uid)).path.str();
      if (!f || recreated(b.uid)) drop(b.uid, path, "DROP FUNCTION " + render_function_signature(b) + " RESTRICT;");
      if (!f) continue;
      std::string fpath = fin_.entity(*fin_.by_uid(b.uid)).path.str();
      if (recreated(b.uid)) {
        main(b.uid, fpath, render_create_function(*f, false));
        continue;
      }
      if (f->body != b.body || f->options != b.options || f->language != b.language) {
        FunctionDef replaced = *f;
        replaced.ns = b.ns;
        replaced.name = b.name;
        unchecked_.emplace(path, SqlCommand{render_create_function(replaced, true), PatchPhase::Unchecked, path,
                                            operators_for(b.uid)});
      }
      FunctionDef cur = b;
      if (f->name != b.name) {
        main(b.uid, fpath, "ALTER FUNCTION " + render_function_signature(cur) + "\n  RENAME TO " +
                               quote_identifier(f->name) + ";");
        cur.name = f->name;
      }
      if (f->ns != b.ns) {
        main(b.uid, fpath, "ALTER FUNCTION " + render_function_signature(cur) + "\n  SET SCHEMA " +
                               quote_identifier(f->ns) + ";");
      }
    }
    for (const auto& f : fc_.functions) {
      if (!bc_.function(f.uid)) main(f.uid, fin_.entity(*fin_.by_uid(f.uid)).path.str(), render_create_function(f, false));
    }
  }

  void collect_triggers() {
    for (const auto& b : bc_.triggers) {
      const TriggerDef* f = fc_.trigger(b.uid);
      if (!f || recreated(b.uid)) {
        drop(b.uid, path_of(b.ns, b.name),
             "DROP TRIGGER " + quote_identifier(b.name) + " ON " + render_name(b.table) + " RESTRICT;");
      }
      if (f && recreated(b.uid)) main(b.uid, path_of(f->ns, f->name), render_trigger(*f, f->ns).text);
    }
    for (const auto& f : fc_.triggers) {
      if (!bc_.trigger(f.uid)) main(f.uid, path_of(f.ns, f.name), render_trigger(f, f.ns).text);
    }
  }

  const Plan& plan_;
  const SchemaModel& base_;
  const SchemaModel& fin_;
  const Catalog& bc_;
  const Catalog& fc_;
  std::map<DefUid, int> recreated_;
  std::set<DefUid> base_fk_, fin_fk_;
  std::set<DefUid> explicit_views_, explicit_constraints_;
  std::map<DefUid, std::vector<SqlCommand>> drops_, mains_;
  std::multimap<std::string, SqlCommand> unchecked_;
};

}  // namespace

SqlPatch build_patch(const Plan& plan, const PatchOptions& options) {
  if (!plan.closed()) {
    throw Error(ErrorCode::PendingDecisions, std::to_string(plan.pending()) + " impacted references await a decision");
  }
  if (auto open = plan.unresolved_human_decisions(); !open.empty()) {
    std::string ids;
    for (int id : open) ids += (ids.empty() ? "#" : ", #") + std::to_string(id);
    throw Error(ErrorCode::UnresolvedHumanDecision, "human decisions " + ids + " are neither replaced nor waived");
  }
  reject_contradictions(plan);
  return Builder(plan).build(options);
}

// ---------------------------------------------------------------------------
// Simulation

nlohmann::json SimulationReport::to_json() const {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : violations) v.push_back({{"statement", x.statement}, {"code", to_string(x.code)}, {"message", x.message}});
  return {{"statements", statements}, {"violations", v}, {"warnings", warnings}, {"matchesExpected", matches_expected},
          {"ok", ok()}};
}

namespace {

std::string ns_or_public(const QualifiedName& q) { return q.ns.empty() ? std::string(kPublic) : q.ns; }

std::string relation_path(const QualifiedName& q) {
  return EntityPath({segment(ns_or_public(q)), segment(q.name)}).str();
}

std::string function_path(const Statement& st) {
  PathSegment seg = segment(st.name.name);
  if (st.signature) {
    std::vector<std::string> sig;
    for (const auto& t : *st.signature) sig.push_back(normalize_type(t));
    seg.signature = sig;
  }
  return EntityPath({segment(ns_or_public(st.name)), seg}).str();
}

Operator make_op(OpKind kind, std::string target, nlohmann::json args = nlohmann::json::object()) {
  Operator op;
  op.kind = kind;
  op.target = std::move(target);
  op.args = std::move(args);
  return op;
}

class Simulator {
 public:
  Simulator(const SchemaModel& base, const SimulationOptions& options) : m_(base), options_(options) {
    for (const auto& d : base.diagnostics()) known_.insert(d.root + "\n" + d.message);
  }

  SimulationReport run(std::string_view sql) {
    SimulationReport rep;
    std::vector<Statement> stmts;
    try {
      stmts = parse_statements(sql);
    } catch (const Error& e) {
      rep.violations.push_back({0, e.code(), e.what()});
      rep.final_model = m_;
      rep.matches_expected = false;
      return rep;
    }
    for (std::size_t i = 0; i < stmts.size(); ++i) {
      index_ = i + 1;
      try {
        execute(stmts[i]);
      } catch (const Error& e) {
        violation(e.code(), e.what());
      }
      check_checked();
    }
    rep.statements = stmts.size();
    for (const auto& d : m_.diagnostics()) {
      if (d.severity != Diagnostic::Severity::Warning) continue;
      bool tolerated = std::count(options_.tolerated.begin(), options_.tolerated.end(), d.root) > 0;
      if (tolerated) {
        rep.warnings.push_back(d.root + ": " + d.message);
      } else {
        violation(d.code, d.root + ": " + d.message);
      }
    }
    if (options_.expected) {
      rep.matches_expected = canonical_dump(m_.catalog()) == canonical_dump(options_.expected->catalog());
    }
    rep.violations = std::move(violations_);
    rep.final_model = std::move(m_);
    return rep;
  }

 private:
  void violation(ErrorCode code, std::string message) { violations_.push_back({index_, code, std::move(message)}); }

  void check_checked() {
    for (const auto& d : m_.diagnostics()) {
      if (d.severity != Diagnostic::Severity::Error) continue;
      if (known_.insert(d.root + "\n" + d.message).second) violation(d.code, d.root + ": " + d.message);
    }
  }

  // Legal in the RDBMS iff the strict application succeeds; otherwise the change is still
  // replayed so that later statements are judged on the intended state.
  void apply(const Operator& op) {
    try {
      m_ = analyze(apply_operator(m_, op, ApplyOptions{true}));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::IllegalOnReferencedEntity) throw;
      violation(e.code(), e.what());
      m_ = analyze(apply_operator(m_, op, ApplyOptions{false}));
    }
  }

  void edit(const std::function<void(Catalog&)>& f) {
    Catalog cat = m_.catalog();
    f(cat);
    m_ = analyze(std::move(cat));
  }

  static void need_namespace(const Catalog& cat, const std::string& ns) {
    if (!cat.has_namespace(ns)) throw Error(ErrorCode::ContradictsModel, "schema " + ns + " does not exist");
  }

  void execute(Statement& st) {
    switch (st.kind) {
      case StatementKind::Begin:
      case StatementKind::Commit:
      case StatementKind::Rollback:
        return;
      case StatementKind::CreateSchema:
        edit([&](Catalog& c) { c.add_namespace(st.name.name); });
        return;
      case StatementKind::CreateTable:
        edit([&](Catalog& c) {
          need_namespace(c, st.table.ns);
          c.add_table(st.table);
        });
        return;
      case StatementKind::CreateView: create_view(st); return;
      case StatementKind::CreateFunction: create_function(st); return;
      case StatementKind::CreateTrigger:
        edit([&](Catalog& c) { c.add_trigger(st.trigger, ns_or_public(st.trigger.table)); });
        return;
      case StatementKind::Drop: drop(st); return;
      case StatementKind::AlterTable:
        for (const auto& a : st.actions) alter_table_action(st, a);
        return;
      case StatementKind::AlterView: {
        const auto& a = st.actions.at(0);
        if (a.kind == AlterKind::RenameTo) {
          apply(make_op(OpKind::RenameView, relation_path(st.name), {{"new_name", sql_identifier(a.new_name)}}));
        } else if (a.kind == AlterKind::SetSchema) {
          apply(make_op(OpKind::MoveView, relation_path(st.name), {{"namespace", sql_identifier(a.new_name)}}));
        } else {
          apply(make_op(OpKind::RenameColumn, relation_path(st.name) + "." + sql_identifier(a.name),
                        {{"new_name", sql_identifier(a.new_name)}}));
        }
        return;
      }
      case StatementKind::AlterFunction: {
        const auto& a = st.actions.at(0);
        OpKind k = a.kind == AlterKind::RenameTo ? OpKind::RenameStoredProcedure : OpKind::MoveStoredProcedure;
        const char* key = a.kind == AlterKind::RenameTo ? "new_name" : "namespace";
        apply(make_op(k, function_path(st), {{key, sql_identifier(a.new_name)}}));
        return;
      }
    }
  }

  void create_view(const Statement& st) {
    const ViewDef* old = m_.catalog().find_view(st.view.ns, st.view.name);
    if (!old) {
      edit([&](Catalog& c) {
        need_namespace(c, st.view.ns);
        if (c.relation_exists(st.view.ns, st.view.name)) {
          throw Error(ErrorCode::ContradictsModel, "relation " + st.view.name + " already exists");
        }
        c.add_view(st.view);
      });
      return;
    }
    if (!st.or_replace) throw Error(ErrorCode::ContradictsModel, "view " + st.view.name + " already exists");
    std::vector<std::string> before;
    for (EntityId c : m_.columns_of(*m_.by_uid(old->uid))) before.push_back(m_.entity(c).name);
    DefUid uid = old->uid;
    edit([&](Catalog& c) { c.view(uid)->query = st.view.query; });
    std::vector<std::string> after;
    for (EntityId c : m_.columns_of(*m_.by_uid(uid))) after.push_back(m_.entity(c).name);
    if (after.size() < before.size() || !std::equal(before.begin(), before.end(), after.begin())) {
      violation(ErrorCode::IllegalOnReferencedEntity,
                "CREATE OR REPLACE VIEW " + st.view.name + " cannot change or drop existing output columns");
    }
  }

  void create_function(const Statement& st) {
    const FunctionDef* same = nullptr;
    for (const FunctionDef* f : m_.catalog().find_functions(st.function.ns, st.function.name)) {
      if (f->signature() == st.function.signature()) same = f;
    }
    if (!same) {
      edit([&](Catalog& c) {
        need_namespace(c, st.function.ns);
        c.add_function(st.function);
      });
      return;
    }
    if (!st.or_replace) throw Error(ErrorCode::ContradictsModel, "function " + st.function.name + " already exists");
    bool names_kept = same->params.size() == st.function.params.size();
    for (std::size_t i = 0; names_kept && i < same->params.size(); ++i) {
      names_kept = same->params[i].name == st.function.params[i].name;
    }
    if (!names_kept) violation(ErrorCode::ContradictsModel, "cannot change the parameter names of " + st.function.name);
    if (normalize_type(same->returns) != normalize_type(st.function.returns)) {
      violation(ErrorCode::ContradictsModel, "cannot change the return type of " + st.function.name);
    }
    DefUid uid = same->uid;
    edit([&](Catalog& c) {
      FunctionDef* f = c.function(uid);
      f->body = st.function.body;
      f->options = st.function.options;
      f->language = st.function.language;
      f->returns = st.function.returns;
      for (std::size_t i = 0; i < f->params.size() && i < st.function.params.size(); ++i) {
        f->params[i].name = st.function.params[i].name;
      }
    });
  }

  void drop(const Statement& st) {
    switch (st.drop_kind) {
      case DropKind::Table: apply(make_op(OpKind::RemoveTable, relation_path(st.name))); return;
      case DropKind::View: apply(make_op(OpKind::RemoveView, relation_path(st.name))); return;
      case DropKind::Function: apply(make_op(OpKind::RemoveStoredProcedure, function_path(st))); return;
      case DropKind::Trigger:
        apply(make_op(OpKind::RemoveTrigger,
                      EntityPath({segment(ns_or_public(st.on_table)), segment(st.name.name)}).str()));
        return;
      case DropKind::Schema: throw Error(ErrorCode::UnsupportedStatement, "DROP SCHEMA is not simulated");
    }
  }

  TableDef* table_in(Catalog& c, const QualifiedName& q) {
    const TableDef* t = c.find_table(ns_or_public(q), q.name);
    if (!t) throw Error(ErrorCode::UnknownEntity, "no table " + relation_path(q));
    return c.table(t->uid);
  }

  void alter_table_action(const Statement& st, const AlterAction& a) {
    const std::string table = relation_path(st.name);
    auto column = [&](const std::string& n) { return table + "." + sql_identifier(n); };
    switch (a.kind) {
      case AlterKind::RenameTo:
        apply(make_op(OpKind::RenameTable, table, {{"new_name", sql_identifier(a.new_name)}}));
        return;
      case AlterKind::SetSchema:
        apply(make_op(OpKind::MoveTable, table, {{"namespace", sql_identifier(a.new_name)}}));
        return;
      case AlterKind::RenameColumn:
        apply(make_op(OpKind::RenameColumn, column(a.name), {{"new_name", sql_identifier(a.new_name)}}));
        return;
      case AlterKind::AlterColumnType:
        apply(make_op(OpKind::RetypeColumn, column(a.name), {{"type", a.type}}));
        return;
      case AlterKind::DropColumn: apply(make_op(OpKind::RemoveColumn, column(a.name))); return;
      case AlterKind::DropConstraint: apply(make_op(OpKind::RemoveConstraint, column(a.name))); return;
      case AlterKind::AddColumn:
        edit([&](Catalog& c) {
          TableDef* t = table_in(c, st.name);
          if (t->find_column(a.column.name)) throw Error(ErrorCode::ContradictsModel, "column " + a.column.name + " exists");
          ColumnDef col = a.column;
          col.uid = c.fresh();
          t->columns.push_back(col);
          for (const auto& k : a.column_constraints) c.add_constraint(*t, k);
        });
        return;
      case AlterKind::AddConstraint:
        edit([&](Catalog& c) { c.add_constraint(*table_in(c, st.name), a.constraint); });
        return;
      case AlterKind::SetNotNull:
      case AlterKind::SetDefault:
      case AlterKind::DropNotNull:
      case AlterKind::DropDefault:
        edit([&](Catalog& c) {
          TableDef* t = table_in(c, st.name);
          if (!t->find_column(a.name)) throw Error(ErrorCode::UnknownEntity, "no column " + column(a.name));
          bool not_null = a.kind == AlterKind::SetNotNull || a.kind == AlterKind::DropNotNull;
          ConstraintKind kind = not_null ? ConstraintKind::NotNull : ConstraintKind::Default;
          std::erase_if(t->constraints, [&](const ConstraintDef& k) {
            return k.kind == kind && k.columns.size() == 1 && k.columns[0] == a.name;
          });
          if (a.kind == AlterKind::SetNotNull || a.kind == AlterKind::SetDefault) {
            ConstraintDef k;
            k.kind = kind;
            k.columns = {a.name};
            k.expression = a.expression;
            c.add_constraint(*t, k);
          }
        });
        return;
    }
  }

  SchemaModel m_;
  const SimulationOptions& options_;
  std::set<std::string> known_;
  std::vector<Violation> violations_;
  std::size_t index_ = 0;
};

}  // namespace

SimulationReport simulate_patch(std::string_view patch_sql, const SchemaModel& base, const SimulationOptions& options) {
  return Simulator(base, options).run(patch_sql);
}

SimulationReport simulate_plan_patch(const Plan& plan, const SqlPatch& patch) {
  SimulationOptions options;
  options.expected = &plan.final_model();
  const SchemaModel& fin = plan.final_model();
  for (const auto& n : plan.nodes) {
    if (!n.waived || !n.actionable_uid) continue;
    if (auto e = fin.by_uid(n.actionable_uid)) options.tolerated.push_back(fin.entity(*e).path.str());
  }
  return simulate_patch(patch.text(), plan.base, options);
}

}  // namespace dbevo
