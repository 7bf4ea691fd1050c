#include "dbevo/catalog.hpp"

#include <algorithm>
#include <sstream>

#include "dbevo/entity_path.hpp"
#include "dbevo/utf8.hpp"

namespace dbevo {

std::string_view to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::PrimaryKey: return "PrimaryKey";
    case ConstraintKind::ForeignKey: return "ForeignKey";
    case ConstraintKind::Unique: return "Unique";
    case ConstraintKind::Check: return "Check";
    case ConstraintKind::NotNull: return "NotNull";
    case ConstraintKind::Default: return "Default";
  }
  return "?";
}

ColumnDef* TableDef::find_column(std::string_view n) {
  for (auto& c : columns)
    if (c.name == n) return &c;
  return nullptr;
}
const ColumnDef* TableDef::find_column(std::string_view n) const {
  return const_cast<TableDef*>(this)->find_column(n);
}
ConstraintDef* TableDef::find_constraint(std::string_view n) {
  for (auto& c : constraints)
    if (c.name == n) return &c;
  return nullptr;
}
const ConstraintDef* TableDef::find_constraint(std::string_view n) const {
  return const_cast<TableDef*>(this)->find_constraint(n);
}

std::vector<std::string> FunctionDef::signature() const {
  std::vector<std::string> sig;
  for (const auto& p : params) {
    if (p.mode == "out") continue;
    sig.push_back(normalize_type(p.type));
  }
  return sig;
}

bool Catalog::has_namespace(std::string_view ns) const {
  if (ns == kPublic || ns == "pg_catalog") return true;
  return std::find(namespaces.begin(), namespaces.end(), ns) != namespaces.end();
}

namespace {
template <typename V>
auto* by_uid(V& vec, DefUid uid) {
  for (auto& x : vec)
    if (x.uid == uid) return &x;
  return static_cast<typename V::value_type*>(nullptr);
}
}  // namespace

TableDef* Catalog::table(DefUid uid) { return by_uid(tables, uid); }
const TableDef* Catalog::table(DefUid uid) const { return const_cast<Catalog*>(this)->table(uid); }
ViewDef* Catalog::view(DefUid uid) { return by_uid(views, uid); }
const ViewDef* Catalog::view(DefUid uid) const { return const_cast<Catalog*>(this)->view(uid); }
FunctionDef* Catalog::function(DefUid uid) { return by_uid(functions, uid); }
const FunctionDef* Catalog::function(DefUid uid) const { return const_cast<Catalog*>(this)->function(uid); }
TriggerDef* Catalog::trigger(DefUid uid) { return by_uid(triggers, uid); }
const TriggerDef* Catalog::trigger(DefUid uid) const { return const_cast<Catalog*>(this)->trigger(uid); }

const TableDef* Catalog::find_table(std::string_view ns, std::string_view name) const {
  for (const auto& t : tables)
    if (t.ns == ns && t.name == name) return &t;
  return nullptr;
}

const ViewDef* Catalog::find_view(std::string_view ns, std::string_view name) const {
  for (const auto& v : views)
    if (v.ns == ns && v.name == name) return &v;
  return nullptr;
}

bool Catalog::relation_exists(std::string_view ns, std::string_view name) const {
  return find_table(ns, name) != nullptr || find_view(ns, name) != nullptr;
}

std::vector<const FunctionDef*> Catalog::find_functions(std::string_view ns, std::string_view name) const {
  std::vector<const FunctionDef*> out;
  for (const auto& f : functions)
    if (f.ns == ns && f.name == name) out.push_back(&f);
  return out;
}

TableDef* Catalog::owner_of(DefUid sub_uid) {
  for (auto& t : tables) {
    for (const auto& c : t.columns)
      if (c.uid == sub_uid) return &t;
    for (const auto& k : t.constraints)
      if (k.uid == sub_uid) return &t;
  }
  return nullptr;
}
const TableDef* Catalog::owner_of(DefUid sub_uid) const { return const_cast<Catalog*>(this)->owner_of(sub_uid); }

const FunctionDef* Catalog::function_of_param(DefUid param_uid) const {
  for (const auto& f : functions)
    for (const auto& p : f.params)
      if (p.uid == param_uid) return &f;
  return nullptr;
}

namespace {
[[noreturn]] void contradicts(const std::string& msg) { throw Error(ErrorCode::ContradictsModel, msg); }
}  // namespace

void Catalog::add_namespace(const std::string& ns) {
  if (has_namespace(ns)) contradicts("namespace " + ns + " already exists");
  namespaces.push_back(ns);
}

TableDef& Catalog::add_table(TableDef t) {
  if (!has_namespace(t.ns)) contradicts("namespace " + t.ns + " does not exist");
  if (relation_exists(t.ns, t.name)) contradicts("relation " + t.ns + "." + t.name + " already exists");
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (t.columns[i].name == t.columns[j].name) contradicts("column " + t.columns[i].name + " specified more than once");
  std::vector<ConstraintDef> pending = std::move(t.constraints);
  t.constraints.clear();
  assign_uids(t);
  tables.push_back(std::move(t));
  TableDef& stored = tables.back();
  for (auto& c : pending) add_constraint(stored, std::move(c));
  return stored;
}

ConstraintDef& Catalog::add_constraint(TableDef& t, ConstraintDef c) {
  if (c.name.empty()) c.name = default_constraint_name(t, c.kind, c.columns);
  if (t.find_constraint(c.name) != nullptr) contradicts("constraint " + c.name + " already exists on " + t.name);
  if (c.kind == ConstraintKind::PrimaryKey)
    for (const auto& k : t.constraints)
      if (k.kind == ConstraintKind::PrimaryKey) contradicts("multiple primary keys for table " + t.name);
  if (c.uid == 0) c.uid = fresh();
  t.constraints.push_back(std::move(c));
  return t.constraints.back();
}

ViewDef& Catalog::add_view(ViewDef v) {
  if (!has_namespace(v.ns)) contradicts("namespace " + v.ns + " does not exist");
  if (relation_exists(v.ns, v.name)) contradicts("relation " + v.ns + "." + v.name + " already exists");
  if (v.uid == 0) v.uid = fresh();
  views.push_back(std::move(v));
  return views.back();
}

FunctionDef& Catalog::add_function(FunctionDef f) {
  if (!has_namespace(f.ns)) contradicts("namespace " + f.ns + " does not exist");
  for (const auto* other : find_functions(f.ns, f.name))
    if (other->signature() == f.signature()) contradicts("function " + f.ns + "." + f.name + " already exists with same argument types");
  assign_uids(f);
  functions.push_back(std::move(f));
  return functions.back();
}

TriggerDef& Catalog::add_trigger(TriggerDef t, std::string_view table_ns) {
  t.ns = std::string(table_ns);
  for (const auto& other : triggers)
    if (other.ns == t.ns && other.name == t.name) contradicts("trigger " + t.name + " already exists in " + t.ns);
  if (t.uid == 0) t.uid = fresh();
  triggers.push_back(std::move(t));
  return triggers.back();
}

void Catalog::assign_uids(TableDef& t) {
  if (t.uid == 0) t.uid = fresh();
  for (auto& c : t.columns)
    if (c.uid == 0) c.uid = fresh();
  for (auto& k : t.constraints)
    if (k.uid == 0) k.uid = fresh();
}

void Catalog::assign_uids(FunctionDef& f) {
  if (f.uid == 0) f.uid = fresh();
  for (auto& p : f.params)
    if (p.uid == 0) p.uid = fresh();
}

std::string render_qualified(std::string_view ns, std::string_view name, std::string_view context_ns) {
  if (ns.empty() || ns == context_ns) return quote_identifier(name);
  return quote_identifier(ns) + "." + quote_identifier(name);
}

std::string render_name(const QualifiedName& q, std::string_view context_ns) {
  return render_qualified(q.ns, q.name, context_ns);
}

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string render_returns(std::string_view r) {
  if (r.rfind("setof ", 0) == 0) return "SETOF " + normalize_type(r.substr(6));
  if (r.rfind("table", 0) == 0) return std::string(r);
  return normalize_type(r);
}

std::string column_list(const std::vector<std::string>& cols, std::string& out, std::vector<Span>* spans) {
  out += "(";
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ", ";
    std::size_t start = utf8::length(out);
    out += quote_identifier(cols[i]);
    if (spans) spans->push_back({start, utf8::length(out)});
  }
  out += ")";
  return out;
}

// Postgres joins the column names into the generated constraint name.
std::string joined(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) s += "_";
    s += cols[i];
  }
  return s;
}

}  // namespace

std::string default_constraint_name(const TableDef& t, ConstraintKind kind, const std::vector<std::string>& columns) {
  std::string base;
  std::string cols = columns.empty() ? std::string() : "_" + (kind == ConstraintKind::ForeignKey || kind == ConstraintKind::Unique
                                                                ? joined(columns)
                                                                : columns.front());
  switch (kind) {
    case ConstraintKind::PrimaryKey: base = t.name + "_pkey"; break;
    case ConstraintKind::ForeignKey: base = t.name + cols + "_fkey"; break;
    case ConstraintKind::Unique: base = t.name + cols + "_key"; break;
    case ConstraintKind::Check: base = t.name + cols + "_check"; break;
    case ConstraintKind::NotNull: base = t.name + cols + "_not_null"; break;
    case ConstraintKind::Default: base = t.name + cols + "_default"; break;
  }
  std::string name = base;
  for (int i = 1; t.find_constraint(name) != nullptr || t.find_column(name) != nullptr; ++i)
    name = base + std::to_string(i);
  return name;
}

std::string render_create_table(const TableDef& t) {
  std::string out = "CREATE TABLE " + render_qualified(t.ns, t.name) + " (";
  bool first = true;
  auto sep = [&] {
    out += first ? "\n  " : ",\n  ";
    first = false;
  };
  for (const auto& c : t.columns) {
    sep();
    out += quote_identifier(c.name) + " " + c.type;
    for (const auto& k : t.constraints) {
      if (k.columns.size() != 1 || k.columns.front() != c.name) continue;
      if (k.kind == ConstraintKind::NotNull) out += " NOT NULL";
      if (k.kind == ConstraintKind::Default) out += " DEFAULT " + k.expression;
    }
  }
  for (const auto& k : t.constraints) {
    if (k.kind == ConstraintKind::NotNull || k.kind == ConstraintKind::Default) continue;
    sep();
    out += "CONSTRAINT " + quote_identifier(k.name) + " ";
    switch (k.kind) {
      case ConstraintKind::PrimaryKey: out += "PRIMARY KEY "; column_list(k.columns, out, nullptr); break;
      case ConstraintKind::Unique: out += "UNIQUE "; column_list(k.columns, out, nullptr); break;
      case ConstraintKind::Check: out += "CHECK (" + k.expression + ")"; break;
      case ConstraintKind::ForeignKey:
        out += "FOREIGN KEY ";
        column_list(k.columns, out, nullptr);
        out += " REFERENCES " + render_name(k.ref_table);
        if (!k.ref_columns.empty()) {
          out += " ";
          column_list(k.ref_columns, out, nullptr);
        }
        if (!k.fk_actions.empty()) out += " " + k.fk_actions;
        break;
      default: break;
    }
  }
  out += "\n);";
  return out;
}

std::string render_create_view(const ViewDef& v, bool or_replace) {
  return std::string(or_replace ? "CREATE OR REPLACE VIEW " : "CREATE VIEW ") + render_qualified(v.ns, v.name) +
         " AS\n  " + v.query + ";";
}

std::string render_create_function(const FunctionDef& f, bool or_replace) {
  std::string out = or_replace ? "CREATE OR REPLACE FUNCTION\n  " : "CREATE FUNCTION\n  ";
  out += render_qualified(f.ns, f.name) + "(";
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    const auto& p = f.params[i];
    if (i) out += ", ";
    if (!p.mode.empty()) out += upper(p.mode) + " ";
    if (!p.name.empty()) out += sql_identifier(p.name) + " ";
    out += normalize_type(p.type);
  }
  out += ")\n  RETURNS " + render_returns(f.returns) + " AS ";
  std::string delim = "$$";
  if (f.body.find("$$") != std::string::npos) {
    delim = "$body$";
    for (int i = 1; f.body.find(delim) != std::string::npos; ++i) delim = "$body" + std::to_string(i) + "$";
  }
  out += delim + f.body + delim + " LANGUAGE " + f.language;
  if (!f.options.empty()) out += " " + f.options;
  out += ";";
  return out;
}

std::string render_function_signature(const FunctionDef& f) {
  std::string out = render_qualified(f.ns, f.name) + "(";
  auto sig = f.signature();
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (i) out += ", ";
    out += sig[i];
  }
  return out + ")";
}

TriggerText render_trigger(const TriggerDef& t, std::string_view table_ns) {
  (void)table_ns;
  TriggerText r;
  std::string& out = r.text;
  out = "CREATE TRIGGER " + quote_identifier(t.name) + " " + t.timing + " ";
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    if (i) out += " OR ";
    out += t.events[i];
    if (t.events[i] == "UPDATE" && !t.update_columns.empty()) {
      out += " OF ";
      for (std::size_t j = 0; j < t.update_columns.size(); ++j) {
        if (j) out += ", ";
        std::size_t s = utf8::length(out);
        out += quote_identifier(t.update_columns[j]);
        r.update_column_spans.push_back({s, utf8::length(out)});
      }
    }
  }
  out += " ON ";
  std::size_t ts = utf8::length(out);
  out += render_name(t.table);
  r.table_span = {ts, utf8::length(out)};
  out += "\n  FOR EACH " + t.for_each;
  if (!t.when.empty()) {
    out += "\n  WHEN (";
    r.when_offset = utf8::length(out);
    out += t.when + ")";
  }
  out += "\n  EXECUTE PROCEDURE ";
  std::size_t fs = utf8::length(out);
  out += render_name(t.function);
  r.function_span = {fs, utf8::length(out)};
  out += "(" + t.function_args + ");";
  return r;
}

ConstraintText render_constraint(const ConstraintDef& c, std::string_view table_ns) {
  (void)table_ns;
  ConstraintText r;
  std::string& out = r.text;
  auto one_column = [&](std::string_view prefix, std::string_view suffix) {
    out = std::string(prefix);
    std::size_t s = utf8::length(out);
    out += quote_identifier(c.columns.empty() ? std::string() : c.columns.front());
    r.column_spans.push_back({s, utf8::length(out)});
    out += suffix;
  };
  switch (c.kind) {
    case ConstraintKind::NotNull: one_column("ALTER COLUMN ", " SET NOT NULL"); return r;
    case ConstraintKind::Default:
      one_column("ALTER COLUMN ", " SET DEFAULT ");
      r.expr_offset = utf8::length(out);
      out += c.expression;
      return r;
    default: break;
  }
  out = "ADD CONSTRAINT " + quote_identifier(c.name) + " ";
  switch (c.kind) {
    case ConstraintKind::PrimaryKey: out += "PRIMARY KEY "; column_list(c.columns, out, &r.column_spans); break;
    case ConstraintKind::Unique: out += "UNIQUE "; column_list(c.columns, out, &r.column_spans); break;
    case ConstraintKind::Check:
      out += "CHECK (";
      r.expr_offset = utf8::length(out);
      out += c.expression + ")";
      break;
    case ConstraintKind::ForeignKey: {
      out += "FOREIGN KEY ";
      column_list(c.columns, out, &r.column_spans);
      out += " REFERENCES ";
      std::size_t s = utf8::length(out);
      out += render_name(c.ref_table);
      r.ref_table_span = {s, utf8::length(out)};
      if (!c.ref_columns.empty()) {
        out += " ";
        column_list(c.ref_columns, out, &r.ref_column_spans);
      }
      if (!c.fk_actions.empty()) out += " " + c.fk_actions;
      break;
    }
    default: break;
  }
  return r;
}

std::string render_constraint_drop(const ConstraintDef& c) {
  std::string col = quote_identifier(c.columns.empty() ? std::string() : c.columns.front());
  switch (c.kind) {
    case ConstraintKind::NotNull: return "ALTER COLUMN " + col + " DROP NOT NULL";
    case ConstraintKind::Default: return "ALTER COLUMN " + col + " DROP DEFAULT";
    default: return "DROP CONSTRAINT " + quote_identifier(c.name);
  }
}

std::string canonical_dump(const Catalog& c) {
  std::vector<std::string> lines;
  for (const auto& ns : c.namespaces) lines.push_back("namespace " + ns);
  for (const auto& t : c.tables) {
    std::ostringstream s;
    s << "table " << t.ns << "." << t.name << " (";
    for (const auto& col : t.columns) s << col.name << ":" << normalize_type(col.type) << ",";
    s << ")";
    std::vector<std::string> cons;
    for (const auto& k : t.constraints) {
      std::ostringstream cs;
      cs << to_string(k.kind) << " ";
      // NotNull and Default are not named objects in PostgreSQL.
      if (k.kind != ConstraintKind::NotNull && k.kind != ConstraintKind::Default) cs << k.name;
      cs << "[";
      for (const auto& x : k.columns) cs << x << ",";
      cs << "]";
      if (k.kind == ConstraintKind::ForeignKey) {
        cs << "->" << (k.ref_table.ns.empty() ? std::string() : k.ref_table.ns + ".") << k.ref_table.name << "[";
        for (const auto& x : k.ref_columns) cs << x << ",";
        cs << "]" << k.fk_actions;
      }
      if (!k.expression.empty()) cs << "{" << k.expression << "}";
      cons.push_back(cs.str());
    }
    std::sort(cons.begin(), cons.end());
    for (const auto& k : cons) s << " " << k;
    lines.push_back(s.str());
  }
  for (const auto& v : c.views) lines.push_back("view " + v.ns + "." + v.name + " {" + v.query + "}");
  for (const auto& f : c.functions) {
    std::ostringstream s;
    s << "function " << f.ns << "." << f.name << "(";
    for (const auto& p : f.params) s << p.mode << " " << p.name << " " << normalize_type(p.type) << ",";
    s << ") " << render_returns(f.returns) << " " << f.language << " " << f.options << " {" << f.body << "}";
    lines.push_back(s.str());
  }
  for (const auto& t : c.triggers) {
    std::ostringstream s;
    s << "trigger " << t.ns << "." << t.name << " " << render_trigger(t, t.ns).text;
    lines.push_back(s.str());
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace dbevo
