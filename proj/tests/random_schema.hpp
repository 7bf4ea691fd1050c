#pragma once

// Seeded generator of small, valid PostgreSQL schemas together with the operators the
// property checks apply to them. The generator records the dependencies it writes so
// that ordering checks do not need the analyzer.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dbevo::testing {

struct RandomSchema {
  struct Relation {
    std::string name;
    bool view = false;
    std::vector<std::string> columns;
  };
  std::string sql;
  std::vector<Relation> relations;
  std::vector<std::string> procedures;  // zero-argument integer functions
  std::vector<std::string> triggers;
};

class SchemaGenerator {
 public:
  explicit SchemaGenerator(unsigned seed) : rng_(seed) {}

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
  std::mt19937& rng() { return rng_; }

  RandomSchema schema() {
    RandomSchema s;
    s.sql = "CREATE SCHEMA s;\n";
    int tables = 1 + pick(3);
    for (int i = 0; i < tables; ++i) {
      RandomSchema::Relation t{"t" + std::to_string(i), false, {}};
      int cols = 2 + pick(3);
      std::string body;
      for (int c = 0; c < cols; ++c) {
        t.columns.push_back("c" + std::to_string(c));
        body += (c ? ", " : "") + t.columns.back() + " integer" + (c == 0 ? " PRIMARY KEY" : "");
      }
      if (i > 0 && coin(0.4)) body += ", r integer REFERENCES t" + std::to_string(pick(i)) + " (c0)";
      if (coin(0.3)) body += ", CONSTRAINT t" + std::to_string(i) + "_pos CHECK (c1 > 0)";
      s.sql += "CREATE TABLE " + t.name + " (" + body + ");\n";
      s.relations.push_back(t);
    }
    // view names are shuffled so that name order says nothing about dependency order
    int views = pick(8);
    std::vector<int> ids(views);
    for (int i = 0; i < views; ++i) ids[i] = i;
    std::shuffle(ids.begin(), ids.end(), rng_);
    for (int i = 0; i < views; ++i) {
      const auto src = s.relations[pick(static_cast<int>(s.relations.size()))];
      RandomSchema::Relation v{"v" + std::to_string(ids[i]), true, {}};
      std::vector<std::string> cols = src.columns;
      std::shuffle(cols.begin(), cols.end(), rng_);
      cols.resize(1 + pick(static_cast<int>(cols.size())));
      std::string items;
      for (const auto& c : cols) {
        items += (items.empty() ? "" : ", ") + src.name + "." + c;
        v.columns.push_back(c);
      }
      std::string where;
      if (coin()) where = " WHERE " + src.name + "." + src.columns[pick(static_cast<int>(src.columns.size()))] + " > 0";
      s.sql += "CREATE VIEW " + v.name + " AS SELECT " + items + " FROM " + src.name + where + ";\n";
      s.relations.push_back(v);
    }
    int procs = pick(4);
    for (int i = 0; i < procs; ++i) {
      const auto& src = s.relations[pick(static_cast<int>(s.relations.size()))];
      std::string name = "p" + std::to_string(i);
      std::string body = "DECLARE k integer; BEGIN SELECT " + src.name + "." + src.columns.front() + " INTO k FROM " +
                         src.name + ";";
      if (i > 0 && coin()) body += " k := k + p" + std::to_string(pick(i)) + "();";
      body += " RETURN k; END;";
      s.sql += "CREATE FUNCTION " + name + "() RETURNS integer AS $$ " + body + " $$ LANGUAGE plpgsql;\n";
      s.procedures.push_back(name);
    }
    if (coin(0.4)) {
      const auto& t = s.relations[pick(tables)];
      s.sql += "CREATE FUNCTION tf() RETURNS trigger AS $$ BEGIN RETURN NEW; END; $$ LANGUAGE plpgsql;\n";
      std::string of = coin() ? " OF " + t.columns[1 + pick(static_cast<int>(t.columns.size()) - 1)] : "";
      s.sql += "CREATE TRIGGER trg BEFORE UPDATE" + of + " ON " + t.name + " FOR EACH ROW EXECUTE FUNCTION tf();\n";
      s.triggers.push_back("trg");
    }
    return s;
  }

  // An entity-oriented operator on a random entity of `s`.
  nlohmann::json op(const RandomSchema& s) {
    const auto& rel = s.relations[pick(static_cast<int>(s.relations.size()))];
    std::string path = "public." + rel.name;
    switch (pick(7)) {
      case 0: return {{"op", rel.view ? "RenameView" : "RenameTable"}, {"target", path}, {"args", {{"new_name", "renamed"}}}};
      case 1: return {{"op", rel.view ? "RemoveView" : "RemoveTable"}, {"target", path}};
      case 2: return {{"op", rel.view ? "MoveView" : "MoveTable"}, {"target", path}, {"args", {{"namespace", "s"}}}};
      case 3: {
        // c0 is the key of tables and may hold foreign keys; the others are free to change
        std::string col = rel.columns[rel.columns.size() > 1 ? 1 + pick(static_cast<int>(rel.columns.size()) - 1) : 0];
        return {{"op", "RenameColumn"}, {"target", path + "." + col}, {"args", {{"new_name", "renamed"}}}};
      }
      case 4: {
        if (rel.columns.size() < 2) break;
        std::string col = rel.columns[1 + pick(static_cast<int>(rel.columns.size()) - 1)];
        return {{"op", "RemoveColumn"}, {"target", path + "." + col}};
      }
      case 5:
        if (rel.view) break;
        return {{"op", "RetypeColumn"}, {"target", path + "." + rel.columns.back()}, {"args", {{"type", "int8"}}}};
      default: break;
    }
    if (s.procedures.empty()) {
      return {{"op", rel.view ? "RenameView" : "RenameTable"}, {"target", path}, {"args", {{"new_name", "renamed"}}}};
    }
    std::string fn = "public." + s.procedures[pick(static_cast<int>(s.procedures.size()))] + "()";
    switch (pick(3)) {
      case 0: return {{"op", "RenameStoredProcedure"}, {"target", fn}, {"args", {{"new_name", "renamed"}}}};
      case 1: return {{"op", "RemoveStoredProcedure"}, {"target", fn}};
      default: return {{"op", "MoveStoredProcedure"}, {"target", fn}, {"args", {{"namespace", "s"}}}};
    }
  }

 private:
  std::mt19937 rng_;
};

// A random DAG of views over one table column: every view reads column a
// of one earlier relation and may join further earlier views.
struct RandomDag {
  std::string sql;
  std::vector<std::string> views;                        // creation order
  std::map<std::string, std::set<std::string>> depends;  // direct edges, view -> view
};

inline RandomDag random_dag(SchemaGenerator& g, int n) {
  RandomDag d;
  d.sql = "CREATE TABLE t (a integer, b integer);\n";
  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), g.rng());
  for (int i = 0; i < n; ++i) {
    std::string name = "w" + std::to_string(ids[i]);
    int first = g.pick(i + 1) - 1;  // -1: the table
    std::string src = first < 0 ? "t" : d.views[first];
    std::string from = src;
    d.depends[name];
    if (first >= 0) d.depends[name].insert(src);
    for (int j = 0; j < i; ++j) {
      if (j == first || !g.coin(0.25)) continue;
      from += ", " + d.views[j];
      d.depends[name].insert(d.views[j]);
    }
    d.sql += "CREATE VIEW " + name + " AS SELECT " + src + ".a FROM " + from + ";\n";
    d.views.push_back(name);
  }
  return d;
}

}  // namespace dbevo::testing
