#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "dbevo/model.hpp"
#include "dbevo/operators.hpp"
#include "dbevo/plan.hpp"

namespace dbevo::testing {

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(DBEVO_FIXTURE_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing fixture " + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SchemaModel fixture_model(const std::string& name) { return load_schema(read_fixture(name)); }

inline Operator op(const std::string& json_text) { return operator_from_json(nlohmann::json::parse(json_text)); }

inline EntityId id_of(const SchemaModel& m, const std::string& path) { return m.resolve(EntityPath::parse(path)); }

inline std::string text_of(const SchemaModel& m, const std::string& path) {
  return m.entity(id_of(m, path)).source_text;
}

// Collapses runs of whitespace so texts can be compared independently of layout.
inline std::string squash(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

// Replays derive_plan, answering every pending reference with `kind` when offered,
// else with its first candidate.
inline Plan decide_all(const SchemaModel& m, const std::vector<Operator>& ops, OpKind kind, std::vector<Decision> log = {},
                PlanOptions options = {}) {
  Plan p = derive_plan(m, ops, log, {}, options);
  for (int guard = 0; !p.closed() && guard < 200; ++guard) {
    auto it = std::find_if(p.refs.begin(), p.refs.end(),
                           [](const ImpactedReference& r) { return r.status == RefStatus::Pending; });
    OpKind pick = it->candidates.front().candidate.kind;
    for (const auto& c : it->candidates)
      if (c.candidate.kind == kind) pick = kind;
    log.push_back({it->address, pick, std::nullopt});
    p = derive_plan(m, ops, log, {}, options);
  }
  return p;
}

// Schema with `n` views that read public tables and one shared view, referenced by
// nothing, plus an empty schema "web" to move them to.
inline std::string web_views_fixture(int n, int tables) {
  std::string s = "CREATE SCHEMA web;\n\n";
  for (int t = 1; t <= tables; ++t) {
    std::string name = "t" + std::to_string(t);
    s += "CREATE TABLE " + name + " (\n  id int4,\n  label varchar,\n  CONSTRAINT " + name +
         "_pkey PRIMARY KEY (id)\n);\n\n";
  }
  s += "CREATE VIEW shared_labels AS\n  SELECT t1.id, t1.label FROM t1;\n\n";
  for (int v = 1; v <= n; ++v) {
    std::string a = "t" + std::to_string((v - 1) % tables + 1);
    std::string b = "t" + std::to_string((v + 7) % tables + 1);
    s += "CREATE VIEW web_view" + std::to_string(v) + " AS\n  SELECT " + a + ".id, " + b + ".label\n  FROM " + a +
         "\n    JOIN " + b + " ON " + b + ".id = " + a + ".id";
    if (v % 5 == 0) s += "\n    JOIN shared_labels ON shared_labels.id = " + a + ".id";
    s += ";\n\n";
  }
  return s;
}

}  // namespace dbevo::testing
