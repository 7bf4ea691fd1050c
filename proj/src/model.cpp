#include "dbevo/model.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include <json.hpp>

#include "dbevo/utf8.hpp"

namespace dbevo {

std::string_view to_string(EntityKind k) {
  switch (k) {
    case EntityKind::Namespace: return "Namespace";
    case EntityKind::Table: return "Table";
    case EntityKind::Column: return "Column";
    case EntityKind::Constraint: return "Constraint";
    case EntityKind::Type: return "TypeRef";
    case EntityKind::View: return "View";
    case EntityKind::StoredProcedure: return "StoredProcedure";
    case EntityKind::Parameter: return "Parameter";
    case EntityKind::LocalVariable: return "LocalVariable";
    case EntityKind::Trigger: return "Trigger";
    case EntityKind::Query: return "CRUDQuery";
    case EntityKind::Clause: return "Clause";
    case EntityKind::DerivedTable: return "DerivedTable";
  }
  return "?";
}

std::string_view to_string(QueryKind k) {
  switch (k) {
    case QueryKind::Select: return "Select";
    case QueryKind::Insert: return "Insert";
    case QueryKind::Update: return "Update";
    case QueryKind::Delete: return "Delete";
  }
  return "?";
}

std::string_view to_string(ClauseKind k) {
  switch (k) {
    case ClauseKind::With: return "With";
    case ClauseKind::Select: return "Select";
    case ClauseKind::From: return "From";
    case ClauseKind::Where: return "Where";
    case ClauseKind::Join: return "Join";
    case ClauseKind::Union: return "Union";
    case ClauseKind::Intersect: return "Intersect";
    case ClauseKind::Except: return "Except";
    case ClauseKind::GroupBy: return "GroupBy";
    case ClauseKind::OrderBy: return "OrderBy";
    case ClauseKind::Having: return "Having";
    case ClauseKind::Limit: return "Limit";
    case ClauseKind::Offset: return "Offset";
    case ClauseKind::Fetch: return "Fetch";
    case ClauseKind::Insert: return "Insert";
    case ClauseKind::Into: return "Into";
    case ClauseKind::Returning: return "Returning";
    case ClauseKind::Update: return "Update";
    case ClauseKind::Set: return "Set";
    case ClauseKind::Delete: return "Delete";
  }
  return "?";
}

std::string_view to_string(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::TableReference: return "TableReference";
    case ReferenceKind::ColumnReference: return "ColumnReference";
    case ReferenceKind::StoredProcedureCall: return "StoredProcedureCall";
    case ReferenceKind::VariableReference: return "VariableReference";
    case ReferenceKind::TypeReference: return "TypeReference";
  }
  return "?";
}

namespace {

bool segment_matches(const Entity& e, const PathSegment& seg) {
  if (e.name != seg.name) return false;
  if (e.kind == EntityKind::StoredProcedure && seg.signature) return e.path.back().signature == seg.signature;
  return !seg.signature;
}

// Triggers share their namespace with relations; on a clash the relation wins.
int kind_rank(EntityKind k) { return k == EntityKind::Trigger ? 1 : 0; }

}  // namespace

std::optional<EntityId> SchemaModel::find(const EntityPath& path) const {
  if (path.empty()) return std::nullopt;
  auto walk = [&](const std::vector<PathSegment>& segs) -> std::optional<EntityId> {
    std::optional<EntityId> cur;
    for (const auto& e : entities_) {
      if (e.kind == EntityKind::Namespace && e.name == segs[0].name) {
        cur = e.id;
        break;
      }
    }
    if (!cur) return std::nullopt;
    for (std::size_t i = 1; i < segs.size(); ++i) {
      std::vector<EntityId> hits;
      for (EntityId c : entities_[*cur].children) {
        if (segment_matches(entities_[c], segs[i])) hits.push_back(c);
      }
      if (hits.empty()) return std::nullopt;
      std::stable_sort(hits.begin(), hits.end(), [&](EntityId a, EntityId b) {
        return kind_rank(entities_[a].kind) < kind_rank(entities_[b].kind);
      });
      if (hits.size() > 1 && kind_rank(entities_[hits[0]].kind) == kind_rank(entities_[hits[1]].kind)) {
        return std::nullopt;  // ambiguous overload
      }
      cur = hits[0];
    }
    return cur;
  };
  if (auto hit = walk(path.segments())) return hit;
  std::vector<PathSegment> with_public;
  with_public.push_back(PathSegment{std::string(kPublic), false, std::nullopt});
  with_public.insert(with_public.end(), path.segments().begin(), path.segments().end());
  return walk(with_public);
}

EntityId SchemaModel::resolve(const EntityPath& path) const {
  if (auto id = find(path)) return *id;
  throw Error(ErrorCode::UnknownEntity, "unknown entity: " + path.str());
}

std::optional<EntityId> SchemaModel::by_uid(DefUid uid) const {
  auto it = uid_index_.find(uid);
  if (it == uid_index_.end()) return std::nullopt;
  return it->second;
}

EntityId SchemaModel::actionable(EntityId id) const {
  while (id != kNoEntity) {
    const Entity& e = entities_[id];
    switch (e.kind) {
      case EntityKind::Table:
      case EntityKind::View:
      case EntityKind::StoredProcedure:
      case EntityKind::Trigger:
        return id;
      case EntityKind::Namespace:
      case EntityKind::Type:
        return kNoEntity;
      default:
        id = e.container;
    }
  }
  return kNoEntity;
}

EntityId SchemaModel::graph_node(EntityId id) const {
  for (EntityId cur = id; cur != kNoEntity; cur = entities_[cur].container) {
    if (entities_[cur].fk_node) return cur;
    if (entities_[cur].kind == EntityKind::Table) break;
  }
  return actionable(id);
}

bool SchemaModel::is_fk_node(EntityId id) const { return id != kNoEntity && entities_[id].fk_node; }

bool SchemaModel::contains(EntityId ancestor, EntityId id) const {
  for (EntityId cur = id; cur != kNoEntity; cur = entities_[cur].container) {
    if (cur == ancestor) return true;
  }
  return false;
}

std::optional<std::size_t> SchemaModel::reference_at(EntityId owner_or_root, Span span) const {
  for (const auto& r : references_) {
    if ((r.root == owner_or_root || r.owner == owner_or_root) && r.span == span) return r.id;
  }
  return std::nullopt;
}

std::vector<std::size_t> SchemaModel::references_in_root(EntityId root) const {
  std::vector<std::size_t> out;
  for (const auto& r : references_) {
    if (r.root == root) out.push_back(r.id);
  }
  return out;
}

std::vector<EntityId> SchemaModel::columns_of(EntityId relation) const {
  std::vector<EntityId> out;
  for (EntityId c : entities_[relation].children) {
    if (entities_[c].kind == EntityKind::Column) out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [&](EntityId a, EntityId b) { return entities_[a].ordinal < entities_[b].ordinal; });
  return out;
}

EntityId SchemaModel::child_named(EntityId parent, std::string_view name, EntityKind kind) const {
  for (EntityId c : entities_[parent].children) {
    if (entities_[c].kind == kind && entities_[c].name == name) return c;
  }
  return kNoEntity;
}

std::size_t SchemaModel::count(EntityKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(entities_.begin(), entities_.end(), [&](const Entity& e) { return e.kind == kind; }));
}

bool SchemaModel::has_errors() const {
  return std::any_of(diagnostics_.begin(), diagnostics_.end(),
                     [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::Error; });
}

std::optional<std::size_t> DependencyGraph::node_of_uid(DefUid uid) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].uid == uid) return i;
  }
  return std::nullopt;
}

std::vector<std::vector<bool>> DependencyGraph::reachability() const {
  const std::size_t n = nodes.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) adj[e.from].push_back(e.to);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack = adj[s];
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      if (reach[s][v]) continue;
      reach[s][v] = true;
      for (std::size_t w : adj[v]) stack.push_back(w);
    }
  }
  return reach;
}

std::string DependencyGraph::to_dot() const {
  std::string out = "digraph dependencies {\n";
  for (const auto& n : nodes) {
    out += "  \"" + n.path + "\" [kind=\"" + std::string(to_string(n.kind)) + "\"];\n";
  }
  for (const auto& e : edges) {
    out += "  \"" + nodes[e.from].path + "\" -> \"" + nodes[e.to].path + "\" [label=\"" +
           std::to_string(e.ref_count) + "\"];\n";
  }
  out += "}\n";
  return out;
}

std::string DependencyGraph::to_json() const {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : nodes) j["nodes"].push_back({{"path", n.path}, {"kind", to_string(n.kind)}});
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : edges) {
    j["edges"].push_back({{"from", nodes[e.from].path}, {"to", nodes[e.to].path}, {"refCount", e.ref_count}});
  }
  if (cycle) {
    auto c = nlohmann::ordered_json::array();
    for (std::size_t i : *cycle) c.push_back(nodes[i].path);
    j["cycle"] = c;
  } else {
    j["cycle"] = nullptr;
  }
  return j.dump(2);
}

DependencyGraph dependency_graph(const SchemaModel& model) {
  DependencyGraph g;
  std::map<EntityId, std::size_t> index;
  std::vector<EntityId> ids;
  for (const auto& e : model.entities()) {
    bool node = e.kind == EntityKind::Table || e.kind == EntityKind::View || e.kind == EntityKind::StoredProcedure ||
                e.kind == EntityKind::Trigger || e.fk_node;
    if (node) ids.push_back(e.id);
  }
  std::sort(ids.begin(), ids.end(), [&](EntityId a, EntityId b) {
    return model.entity(a).path.str() < model.entity(b).path.str();
  });
  for (EntityId id : ids) {
    const Entity& e = model.entity(id);
    index[id] = g.nodes.size();
    g.nodes.push_back({id, e.def_uid, e.path.str(), e.kind});
  }
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  for (const auto& r : model.references()) {
    if (!r.resolved || r.target == kNoEntity) continue;
    EntityId from = model.graph_node(r.owner);
    EntityId to = model.graph_node(r.target);
    if (from == kNoEntity || to == kNoEntity || from == to) continue;
    ++counts[{index.at(from), index.at(to)}];
  }
  for (const auto& [k, n] : counts) g.edges.push_back({k.first, k.second, n});

  // Iterative DFS; the first back edge found yields the witness.
  const std::size_t n = g.nodes.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : g.edges) adj[e.from].push_back(e.to);
  std::vector<int> color(n, 0);
  std::vector<std::size_t> parent(n, n);
  for (std::size_t s = 0; s < n && !g.cycle; ++s) {
    if (color[s]) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{s, 0}};
    color[s] = 1;
    while (!stack.empty() && !g.cycle) {
      auto& [v, i] = stack.back();
      if (i < adj[v].size()) {
        std::size_t w = adj[v][i++];
        if (color[w] == 0) {
          color[w] = 1;
          parent[w] = v;
          stack.push_back({w, 0});
        } else if (color[w] == 1) {
          std::vector<std::size_t> cyc{w};
          for (std::size_t u = v; u != w; u = parent[u]) cyc.push_back(u);
          cyc.push_back(w);
          std::reverse(cyc.begin(), cyc.end());
          g.cycle = cyc;
        }
      } else {
        color[v] = 2;
        stack.pop_back();
      }
    }
  }
  return g;
}

std::vector<std::size_t> dependents_of(const SchemaModel& model, const EntityPath& target, bool transitive) {
  EntityId t = model.resolve(target);
  std::vector<std::size_t> out;
  for (const auto& r : model.references()) {
    if (!r.resolved || r.target == kNoEntity) continue;
    if (r.target == t || (transitive && model.contains(t, r.target))) out.push_back(r.id);
  }
  return out;
}

EntitySource entity_source(const SchemaModel& model, const EntityPath& path) {
  EntityId id = model.resolve(path);
  const Entity& e = model.entity(id);
  if (e.root != id) throw Error(ErrorCode::NotSourceBearing, "not a source-bearing entity: " + path.str());
  EntitySource s;
  s.text = e.source_text;
  for (const auto& r : model.references()) {
    if (r.root == id) s.references.emplace_back(r.id, r.span);
  }
  return s;
}

}  // namespace dbevo
