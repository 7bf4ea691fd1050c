// Population of the schema model: entities from catalog definitions, then a static
// pass over every stored text (view queries, procedure bodies, rendered constraint
// and trigger fragments) that reifies identifier occurrences as references.

#include <algorithm>
#include <map>
#include <set>

#include "dbevo/ddl.hpp"
#include "dbevo/lexer.hpp"
#include "dbevo/model.hpp"
#include "dbevo/utf8.hpp"

namespace dbevo {

namespace {

const std::set<std::string, std::less<>> kKeywords = {
    "all", "and", "any", "array", "as", "asc", "at", "between", "both", "by", "case", "cast", "collate",
    "current_date", "current_time", "current_timestamp", "current_user", "default", "desc", "distinct",
    "else", "end", "escape", "except", "exists", "false", "filter", "first", "following", "for", "from",
    "full", "group", "having", "ilike", "in", "inner", "intersect", "interval", "into", "is", "isnull",
    "join", "last", "leading", "left", "like", "limit", "localtime", "localtimestamp", "natural", "not",
    "notnull", "null", "nulls", "offset", "on", "only", "or", "order", "outer", "over", "partition",
    "preceding", "range", "right", "row", "rows", "select", "session_user", "similar", "some",
    "symmetric", "then", "trailing", "true", "union", "unbounded", "unknown", "user", "using", "values",
    "when", "where", "window", "with", "within", "zone", "ties", "fetch", "next", "current_schema",
    // plpgsql
    "found", "strict", "loop", "if", "elsif", "return", "reverse", "perform", "execute", "begin",
    "declare", "exit", "continue", "sqlstate", "sqlerrm", "row_count", "diagnostics", "get", "stacked",
    "result_oid", "pg_context", "constant", "others",
};

const std::set<std::string, std::less<>> kBuiltins = {
    "abs", "age", "array_agg", "array_length", "array_to_string", "avg", "bool_and", "bool_or", "btrim",
    "ceil", "ceiling", "char_length", "character_length", "clock_timestamp", "coalesce", "concat",
    "concat_ws", "count", "current_setting", "currval", "date", "date_part", "date_trunc", "decode",
    "dense_rank", "encode", "every", "exp", "extract", "first_value", "floor", "format", "gen_random_uuid",
    "generate_series", "greatest", "initcap", "int4", "int8", "isfinite", "json_agg", "json_build_object",
    "jsonb_agg", "jsonb_build_object", "lag", "last_value", "lead", "least", "left", "length", "ln", "log",
    "lower", "lpad", "ltrim", "max", "md5", "min", "mod", "nextval", "now", "nullif", "numeric", "overlay",
    "pg_sleep", "position", "power", "quote_ident", "quote_literal", "quote_nullable", "random", "rank",
    "regexp_matches", "regexp_replace", "repeat", "replace", "right", "round", "row_number", "row_to_json",
    "rpad", "rtrim", "set_config", "setval", "sign", "split_part", "sqrt", "statement_timestamp",
    "string_agg", "string_to_array", "strpos", "substr", "substring", "sum", "text", "timeofday",
    "timestamp", "to_char", "to_date", "to_json", "to_number", "to_timestamp", "transaction_timestamp",
    "trim", "trunc", "txid_current", "unnest", "upper", "uuid_generate_v4", "varchar", "bool", "exists",
    "array_position", "array_remove", "array_append", "cardinality", "row", "any", "some", "all",
};

const std::set<std::string, std::less<>> kBuiltinTypes = {
    "int2", "int4", "int8", "float4", "float8", "numeric", "bool", "text", "varchar", "bpchar", "char",
    "date", "time", "timetz", "timestamp", "timestamptz", "interval", "uuid", "json", "jsonb", "bytea",
    "record", "void", "trigger", "oid", "serial", "bigserial", "money", "inet", "cidr", "xml", "name",
    "refcursor",
};

bool is_keyword_token(const Token& t) { return t.kind == TokenKind::Identifier && kKeywords.count(t.value) > 0; }

bool starts_query(const Token& t) {
  return t.is_keyword("select") || t.is_keyword("with") || t.is_keyword("values");
}

PathSegment seg(const std::string& name) { return PathSegment{name, !is_plain_identifier(name), std::nullopt}; }

}  // namespace

bool is_builtin_function(std::string_view name) { return kBuiltins.count(name) > 0; }

class ModelBuilder {
 public:
  explicit ModelBuilder(Catalog c) { m_.catalog_ = std::move(c); }
  SchemaModel build();

 private:
  struct Source {
    std::string name;
    bool aliased = false;
    EntityId relation = kNoEntity;
    bool derived = false;
    std::vector<std::string> columns;
    std::vector<std::size_t> from_refs;
  };
  struct Cte {
    std::string name;
    std::vector<std::string> columns;
  };
  struct Scope {
    const Scope* parent = nullptr;
    std::vector<Source> sources;
    std::vector<Cte> ctes;
    std::vector<std::string> aliases;  // select output names, visible to ORDER BY
    bool aliases_visible = false;
  };
  struct Cx {
    EntityId root = kNoEntity;
    std::vector<Token> toks;
    bool checked = true;
    std::string ns{kPublic};
    EntityId function = kNoEntity;
    EntityId trigger_table = kNoEntity;  // WHEN conditions: NEW/OLD bind here
    std::map<std::string, EntityId> params;
    std::map<std::string, EntityId> locals;
    std::set<std::string> implicit;  // loop variables, trigger records
    int queries = 0;
    int derived = 0;
    bool in_declare = false;
    bool in_exception = false;
  };
  struct NameSeq {
    std::vector<std::string> parts;
    std::vector<Span> spans;
    std::vector<bool> quoted;
    std::size_t next = 0;
    bool star = false;
  };
  struct Output {
    std::string name;
    int item = -1;
  };

  SchemaModel m_;
  std::map<std::string, EntityId> ns_;
  std::map<EntityId, int> view_state_;
  std::map<EntityId, ViewDef> view_defs_;
  std::map<std::string, EntityId> types_;

  Entity& ent(EntityId id) { return m_.entities_[id]; }
  EntityId add(EntityKind kind, std::string name, EntityId container, EntityPath path);
  EntityId namespace_entity(const std::string& ns);
  EntityId type_entity(const std::string& type);

  std::size_t add_ref(Cx& cx, ReferenceKind kind, EntityId owner, const NameSeq& ns, std::size_t first,
                      std::size_t last, EntityId target, int item);
  Span tspan(const Cx& cx, std::size_t b, std::size_t e) const {
    return {cx.toks[b].span.start, cx.toks[e - 1].span.end};
  }

  NameSeq name_seq(const Cx& cx, std::size_t i, std::size_t e) const;
  std::size_t close_paren(const Cx& cx, std::size_t i, std::size_t e) const;
  std::size_t skip_type(const Cx& cx, std::size_t i, std::size_t e) const;
  std::size_t count_args(const Cx& cx, std::size_t open, std::size_t close) const;
  std::vector<std::pair<std::size_t, std::size_t>> split_commas(const Cx& cx, std::size_t b, std::size_t e) const;
  std::size_t find_kw(const Cx& cx, std::size_t b, std::size_t e, std::string_view kw) const;

  EntityId resolve_relation(const std::vector<std::string>& parts, const std::string& owner_ns) const;
  EntityId resolve_function(const std::vector<std::string>& parts, std::size_t argc, const std::string& owner_ns) const;
  const Cte* find_cte(const Scope& s, const std::string& name) const;
  std::vector<std::string> relation_columns(EntityId rel);

  void expr(Cx& cx, std::size_t b, std::size_t e, EntityId owner, Scope& scope, int item = -1);
  std::size_t call_or_name(Cx& cx, std::size_t i, std::size_t e, EntityId owner, Scope& scope, int item);
  void resolve_name(Cx& cx, const NameSeq& ns, EntityId owner, Scope& scope, int item);
  bool resolve_variable(Cx& cx, const NameSeq& ns, EntityId owner, int item);

  std::vector<Output> query(Cx& cx, std::size_t b, std::size_t e, EntityId container, const std::string& name,
                            const Scope* parent);
  EntityId derived_table(Cx& cx, EntityId clause);
  void from_items(Cx& cx, std::size_t b, std::size_t e, EntityId clause, Scope& scope);
  void from_item(Cx& cx, std::size_t b, std::size_t e, EntityId clause, Scope& scope);
  std::size_t alias_of(const Cx& cx, std::size_t i, std::size_t e, Source& src) const;
  void relation_target(Cx& cx, std::size_t b, std::size_t e, EntityId clause, Scope& scope, std::size_t* after);
  std::vector<Output> select_items(Cx& cx, std::size_t b, std::size_t e, EntityId clause, Scope& scope);
  std::vector<std::string> expand_star(const Scope& scope, const std::string* qualifier);

  void analyze_view(EntityId view);
  void analyze_function(EntityId fn, const FunctionDef& f);
  void statement(Cx& cx, std::size_t b, std::size_t e);
  void declaration(Cx& cx, std::size_t b, std::size_t e);
  void analyze_constraint(EntityId con, const TableDef& t, const ConstraintDef& c);
  void analyze_trigger(EntityId trg, const TriggerDef& t);
  void diagnose();
};

EntityId ModelBuilder::add(EntityKind kind, std::string name, EntityId container, EntityPath path) {
  Entity e;
  e.id = m_.entities_.size();
  e.kind = kind;
  e.name = std::move(name);
  e.container = container;
  e.path = std::move(path);
  m_.entities_.push_back(std::move(e));
  EntityId id = m_.entities_.size() - 1;
  if (container != kNoEntity) m_.entities_[container].children.push_back(id);
  return id;
}

EntityId ModelBuilder::namespace_entity(const std::string& ns) {
  auto it = ns_.find(ns);
  if (it != ns_.end()) return it->second;
  EntityId id = add(EntityKind::Namespace, ns, kNoEntity, EntityPath({seg(ns)}));
  ns_[ns] = id;
  return id;
}

EntityId ModelBuilder::type_entity(const std::string& type) {
  auto it = types_.find(type);
  if (it != types_.end()) return it->second;
  EntityId nsid = namespace_entity("pg_catalog");
  EntityId id = add(EntityKind::Type, type, nsid, ent(nsid).path.child(seg(type)));
  types_[type] = id;
  return id;
}

std::size_t ModelBuilder::add_ref(Cx& cx, ReferenceKind kind, EntityId owner, const NameSeq& ns, std::size_t first,
                                  std::size_t last, EntityId target, int item) {
  Reference r;
  r.id = m_.references_.size();
  r.kind = kind;
  r.owner = owner;
  r.root = cx.root;
  r.target = target;
  r.resolved = target != kNoEntity;
  r.checked = cx.checked;
  r.span = {ns.spans[first].start, ns.spans[last].end};
  r.name_span = ns.spans[last];
  r.select_item = item;
  r.qualified = (kind == ReferenceKind::TableReference || kind == ReferenceKind::StoredProcedureCall) && last > first;
  r.name_parts.assign(ns.parts.begin() + static_cast<std::ptrdiff_t>(first),
                      ns.parts.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  m_.references_.push_back(std::move(r));
  return m_.references_.size() - 1;
}

ModelBuilder::NameSeq ModelBuilder::name_seq(const Cx& cx, std::size_t i, std::size_t e) const {
  NameSeq s;
  const auto& t = cx.toks;
  s.parts.push_back(t[i].value);
  s.spans.push_back(t[i].span);
  s.quoted.push_back(t[i].kind == TokenKind::QuotedIdentifier);
  std::size_t j = i + 1;
  while (j + 1 < e && t[j].kind == TokenKind::Dot) {
    if (t[j + 1].is_name()) {
      s.parts.push_back(t[j + 1].value);
      s.spans.push_back(t[j + 1].span);
      s.quoted.push_back(t[j + 1].kind == TokenKind::QuotedIdentifier);
      j += 2;
    } else if (t[j + 1].is_op("*")) {
      s.star = true;
      j += 2;
      break;
    } else {
      break;
    }
  }
  s.next = j;
  return s;
}

std::size_t ModelBuilder::close_paren(const Cx& cx, std::size_t i, std::size_t e) const {
  int depth = 0;
  for (std::size_t j = i; j < e; ++j) {
    auto k = cx.toks[j].kind;
    if (k == TokenKind::LParen || k == TokenKind::LBracket) ++depth;
    if (k == TokenKind::RParen || k == TokenKind::RBracket) {
      if (--depth == 0) return j;
    }
  }
  return e == 0 ? 0 : e - 1;
}

std::size_t ModelBuilder::skip_type(const Cx& cx, std::size_t i, std::size_t e) const {
  const auto& t = cx.toks;
  if (i >= e || !t[i].is_name()) return i;
  std::size_t j = name_seq(cx, i, e).next;
  while (j < e && t[j].is_word()) {
    const std::string& w = t[j].value;
    if (w == "varying" || w == "precision" || w == "zone") {
      ++j;
    } else if ((w == "with" || w == "without") && j + 1 < e && t[j + 1].is_keyword("time")) {
      j += 2;
    } else if (w == "time" && j > i && (t[j - 1].is_keyword("with") || t[j - 1].is_keyword("without"))) {
      ++j;
    } else {
      break;
    }
  }
  if (j < e && t[j].kind == TokenKind::LParen) j = close_paren(cx, j, e) + 1;
  while (j + 1 < e && t[j].kind == TokenKind::LBracket) j = close_paren(cx, j, e) + 1;
  return j;
}

std::size_t ModelBuilder::count_args(const Cx& cx, std::size_t open, std::size_t close) const {
  if (close == open + 1) return 0;
  std::size_t n = 1;
  int depth = 0;
  for (std::size_t j = open + 1; j < close; ++j) {
    auto k = cx.toks[j].kind;
    if (k == TokenKind::LParen || k == TokenKind::LBracket) ++depth;
    if (k == TokenKind::RParen || k == TokenKind::RBracket) --depth;
    if (k == TokenKind::Comma && depth == 0) ++n;
  }
  return n;
}

std::vector<std::pair<std::size_t, std::size_t>> ModelBuilder::split_commas(const Cx& cx, std::size_t b,
                                                                           std::size_t e) const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  int depth = 0;
  std::size_t start = b;
  for (std::size_t j = b; j < e; ++j) {
    auto k = cx.toks[j].kind;
    if (k == TokenKind::LParen || k == TokenKind::LBracket) ++depth;
    if (k == TokenKind::RParen || k == TokenKind::RBracket) --depth;
    if (k == TokenKind::Comma && depth == 0) {
      if (j > start) out.emplace_back(start, j);
      start = j + 1;
    }
  }
  if (e > start) out.emplace_back(start, e);
  return out;
}

std::size_t ModelBuilder::find_kw(const Cx& cx, std::size_t b, std::size_t e, std::string_view kw) const {
  int depth = 0;
  for (std::size_t j = b; j < e; ++j) {
    auto k = cx.toks[j].kind;
    if (k == TokenKind::LParen || k == TokenKind::LBracket) ++depth;
    if (k == TokenKind::RParen || k == TokenKind::RBracket) --depth;
    if (depth == 0 && cx.toks[j].is_keyword(kw)) return j;
  }
  return e;
}

EntityId ModelBuilder::resolve_relation(const std::vector<std::string>& parts, const std::string& owner_ns) const {
  auto lookup = [&](const std::string& ns, const std::string& name) -> EntityId {
    auto it = ns_.find(ns);
    if (it == ns_.end()) return kNoEntity;
    for (EntityId c : m_.entities_[it->second].children) {
      const Entity& e = m_.entities_[c];
      if ((e.kind == EntityKind::Table || e.kind == EntityKind::View) && e.name == name) return c;
    }
    return kNoEntity;
  };
  if (parts.size() == 1) {
    EntityId id = lookup(owner_ns, parts[0]);
    if (id == kNoEntity && owner_ns != kPublic) id = lookup(std::string(kPublic), parts[0]);
    return id;
  }
  if (parts.size() == 2) return lookup(parts[0], parts[1]);
  return kNoEntity;
}

EntityId ModelBuilder::resolve_function(const std::vector<std::string>& parts, std::size_t argc,
                                        const std::string& owner_ns) const {
  auto lookup = [&](const std::string& ns, const std::string& name) -> EntityId {
    auto it = ns_.find(ns);
    if (it == ns_.end()) return kNoEntity;
    for (EntityId c : m_.entities_[it->second].children) {
      const Entity& e = m_.entities_[c];
      if (e.kind != EntityKind::StoredProcedure || e.name != name) continue;
      const FunctionDef* f = m_.catalog_.function(e.def_uid);
      if (f && f->input_arity() == argc) return c;
    }
    return kNoEntity;
  };
  if (parts.size() == 1) {
    EntityId id = lookup(owner_ns, parts[0]);
    if (id == kNoEntity && owner_ns != kPublic) id = lookup(std::string(kPublic), parts[0]);
    return id;
  }
  if (parts.size() == 2) return lookup(parts[0], parts[1]);
  return kNoEntity;
}

const ModelBuilder::Cte* ModelBuilder::find_cte(const Scope& s, const std::string& name) const {
  for (const Scope* cur = &s; cur; cur = cur->parent) {
    for (const auto& c : cur->ctes) {
      if (c.name == name) return &c;
    }
  }
  return nullptr;
}

std::vector<std::string> ModelBuilder::relation_columns(EntityId rel) {
  if (m_.entities_[rel].kind == EntityKind::View) analyze_view(rel);
  std::vector<std::string> out;
  for (EntityId c : m_.columns_of(rel)) out.push_back(m_.entities_[c].name);
  return out;
}

// ---------------------------------------------------------------------------
// Expressions

void ModelBuilder::expr(Cx& cx, std::size_t b, std::size_t e, EntityId owner, Scope& scope, int item) {
  const auto& t = cx.toks;
  std::size_t i = b;
  while (i < e) {
    const Token& tk = t[i];
    switch (tk.kind) {
      case TokenKind::LParen:
        if (i + 1 < e && starts_query(t[i + 1]) && !t[i + 1].is_keyword("values")) {
          std::size_t j = close_paren(cx, i, e);
          EntityId d = derived_table(cx, owner);
          query(cx, i + 1, j, d, "$query", &scope);
          i = j + 1;
        } else {
          ++i;
        }
        continue;
      case TokenKind::Cast:
        i = skip_type(cx, i + 1, e);
        continue;
      case TokenKind::Parameter:
        if (cx.function != kNoEntity) {
          NameSeq ns;
          ns.parts.push_back(tk.text);
          ns.spans.push_back(tk.span);
          ns.quoted.push_back(false);
          auto it = cx.params.find(tk.text);
          add_ref(cx, ReferenceKind::VariableReference, owner, ns, 0, 0,
                  it == cx.params.end() ? kNoEntity : it->second, item);
        }
        ++i;
        continue;
      case TokenKind::Identifier:
      case TokenKind::QuotedIdentifier:
        i = call_or_name(cx, i, e, owner, scope, item);
        continue;
      default:
        ++i;
    }
  }
}

std::size_t ModelBuilder::call_or_name(Cx& cx, std::size_t i, std::size_t e, EntityId owner, Scope& scope, int item) {
  const auto& t = cx.toks;
  const Token& tk = t[i];
  bool dotted = i + 1 < e && t[i + 1].kind == TokenKind::Dot;
  if (tk.kind == TokenKind::Identifier) {
    if (tk.value == "as") return skip_type(cx, i + 1, e);
    if (tk.value == "at" && i + 2 < e && t[i + 1].is_keyword("time") && t[i + 2].is_keyword("zone")) return i + 3;
    if ((tk.value == "new" || tk.value == "old") && dotted && i + 2 < e && t[i + 2].is_name()) {
      if (cx.trigger_table != kNoEntity) {
        NameSeq ns = name_seq(cx, i, e);
        EntityId col = m_.child_named(cx.trigger_table, ns.parts[1], EntityKind::Column);
        add_ref(cx, ReferenceKind::ColumnReference, owner, ns, 1, 1, col, item);
      }
      return i + 3;
    }
    if (is_keyword_token(tk) && !dotted) return i + 1;
  }
  // typed literal: date '2020-01-01'
  if (!dotted && i + 1 < e && t[i + 1].kind == TokenKind::String) return i + 2;

  NameSeq ns = name_seq(cx, i, e);
  std::size_t after = ns.next;
  if (!ns.star && after < e && t[after].kind == TokenKind::LParen) {
    std::size_t close = close_paren(cx, after, e);
    std::size_t argc = count_args(cx, after, close);
    if (ns.parts.size() <= 2 && !(ns.parts.size() == 2 && ns.parts[0] == "pg_catalog")) {
      EntityId fn = resolve_function(ns.parts, argc, cx.ns);
      bool builtin = ns.parts.size() == 1 && is_builtin_function(ns.parts[0]);
      if (fn != kNoEntity || !builtin) {
        add_ref(cx, ReferenceKind::StoredProcedureCall, owner, ns, 0, ns.parts.size() - 1, fn, item);
        m_.references_.back().arg_count = argc;
      }
    }
    std::size_t next = after + 1;
    if (ns.parts.size() == 1 && ns.parts[0] == "extract" && next < close && t[next].is_word()) ++next;
    return next;
  }
  if (ns.star) {
    // t.* outside a select list: treat the qualifier like any source qualifier
    NameSeq q = ns;
    resolve_name(cx, q, owner, scope, item);
    return after;
  }
  resolve_name(cx, ns, owner, scope, item);
  return after;
}

bool ModelBuilder::resolve_variable(Cx& cx, const NameSeq& ns, EntityId owner, int item) {
  if (cx.function == kNoEntity) return false;
  const std::string& n = ns.parts[0];
  if (cx.implicit.count(n)) return true;
  EntityId target = kNoEntity;
  if (auto it = cx.locals.find(n); it != cx.locals.end()) target = it->second;
  else if (auto it2 = cx.params.find(n); it2 != cx.params.end()) target = it2->second;
  if (target == kNoEntity) return false;
  add_ref(cx, ReferenceKind::VariableReference, owner, ns, 0, 0, target, item);
  return true;
}

void ModelBuilder::resolve_name(Cx& cx, const NameSeq& ns, EntityId owner, Scope& scope, int item) {
  const std::size_t n = ns.parts.size();
  if (n == 1 && !ns.star) {
    if (resolve_variable(cx, ns, owner, item)) return;
    for (const Scope* s = &scope; s; s = s->parent) {
      for (const auto& src : s->sources) {
        if (src.relation != kNoEntity) {
          EntityId col = m_.child_named(src.relation, ns.parts[0], EntityKind::Column);
          if (col != kNoEntity) {
            add_ref(cx, ReferenceKind::ColumnReference, owner, ns, 0, 0, col, item);
            return;
          }
        } else if (std::find(src.columns.begin(), src.columns.end(), ns.parts[0]) != src.columns.end()) {
          return;  // column of a derived table: internal to the query
        }
      }
      if (s->aliases_visible &&
          std::find(s->aliases.begin(), s->aliases.end(), ns.parts[0]) != s->aliases.end()) {
        return;
      }
    }
    add_ref(cx, ReferenceKind::ColumnReference, owner, ns, 0, 0, kNoEntity, item);
    return;
  }

  // Qualified: the qualifier names a source (alias or relation), optionally namespace-prefixed.
  const std::size_t qual_len = ns.star ? n : n - 1;
  const Source* hit = nullptr;
  for (const Scope* s = &scope; s && !hit; s = s->parent) {
    for (const auto& src : s->sources) {
      if (qual_len == 1 && src.name == ns.parts[0]) {
        hit = &src;
        break;
      }
      if (qual_len == 2 && !src.aliased && src.relation != kNoEntity &&
          m_.entities_[m_.entities_[src.relation].container].name == ns.parts[0] &&
          m_.entities_[src.relation].name == ns.parts[1]) {
        hit = &src;
        break;
      }
    }
  }
  if (!hit) {
    if (qual_len == 1 && resolve_variable(cx, ns, owner, item)) return;
    if (ns.star) return;
    add_ref(cx, ReferenceKind::ColumnReference, owner, ns, n - 1, n - 1, kNoEntity, item);
    return;
  }
  if (hit->relation != kNoEntity && !hit->aliased) {
    std::size_t id = add_ref(cx, ReferenceKind::TableReference, owner, ns, 0, qual_len - 1, hit->relation, item);
    m_.references_[id].via_source = qual_len == 1;
    m_.references_[id].wildcard = ns.star;
  }
  if (ns.star) {
    for (std::size_t r : hit->from_refs) m_.references_[r].wildcard = true;
    return;
  }
  if (hit->relation != kNoEntity) {
    EntityId col = m_.child_named(hit->relation, ns.parts[n - 1], EntityKind::Column);
    add_ref(cx, ReferenceKind::ColumnReference, owner, ns, n - 1, n - 1, col, item);
  } else if (std::find(hit->columns.begin(), hit->columns.end(), ns.parts[n - 1]) == hit->columns.end() &&
             !hit->columns.empty()) {
    add_ref(cx, ReferenceKind::ColumnReference, owner, ns, n - 1, n - 1, kNoEntity, item);
  }
}

// ---------------------------------------------------------------------------
// Queries

EntityId ModelBuilder::derived_table(Cx& cx, EntityId clause) {
  std::string name = "$derived" + std::to_string(++cx.derived);
  return add(EntityKind::DerivedTable, name, clause, ent(clause).path.child(seg(name)));
}

namespace {

struct ClauseRange {
  ClauseKind kind;
  std::size_t b;
  std::size_t e;
  std::size_t body;  // first token after the clause keyword(s)
};

std::string clause_name(ClauseKind k) {
  std::string s(to_string(k));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::vector<ModelBuilder::Output> ModelBuilder::query(Cx& cx, std::size_t b, std::size_t e, EntityId container,
                                                      const std::string& name, const Scope* parent) {
  const auto& t = cx.toks;
  while (b < e && t[b].kind == TokenKind::LParen && close_paren(cx, b, e) == e - 1) {
    ++b;
    --e;
  }
  EntityId q = add(EntityKind::Query, name, container, ent(container).path.child(seg(name)));
  ent(q).root = cx.root;
  if (b >= e) return {};
  ent(q).span = tspan(cx, b, e);

  // Skip a leading WITH list to find the statement verb.
  std::size_t verb = b;
  if (t[b].is_keyword("with")) {
    std::size_t j = b + 1;
    if (j < e && t[j].is_keyword("recursive")) ++j;
    while (j < e && t[j].is_name()) {
      ++j;
      if (j < e && t[j].kind == TokenKind::LParen) j = close_paren(cx, j, e) + 1;
      if (j < e && t[j].is_keyword("as")) ++j;
      while (j < e && t[j].is_word() && (t[j].value == "not" || t[j].value == "materialized")) ++j;
      if (j < e && t[j].kind == TokenKind::LParen) j = close_paren(cx, j, e) + 1;
      if (j < e && t[j].kind == TokenKind::Comma) {
        ++j;
        continue;
      }
      break;
    }
    verb = j;
  }
  QueryKind kind = QueryKind::Select;
  if (verb < e) {
    if (t[verb].is_keyword("insert")) kind = QueryKind::Insert;
    else if (t[verb].is_keyword("update")) kind = QueryKind::Update;
    else if (t[verb].is_keyword("delete")) kind = QueryKind::Delete;
  }
  ent(q).query_kind = kind;

  // Split into clauses at depth-0 keywords.
  std::vector<ClauseRange> ranges;
  auto open = [&](ClauseKind k, std::size_t at, std::size_t body) {
    if (!ranges.empty()) ranges.back().e = at;
    ranges.push_back({k, at, e, body});
  };
  int depth = 0;
  bool stop = false;
  for (std::size_t j = b; j < e && !stop; ++j) {
    const Token& tk = t[j];
    if (tk.kind == TokenKind::LParen || tk.kind == TokenKind::LBracket) ++depth;
    if (tk.kind == TokenKind::RParen || tk.kind == TokenKind::RBracket) --depth;
    if (depth != 0 || tk.kind != TokenKind::Identifier) continue;
    const std::string& w = tk.value;
    auto next_is = [&](std::string_view kw) { return j + 1 < e && t[j + 1].is_keyword(kw); };
    if (j == b && w == "with") { open(ClauseKind::With, j, j + 1); continue; }
    if (kind == QueryKind::Insert) {
      if (j == verb && w == "insert") open(ClauseKind::Insert, j, j + 1);
      else if (w == "returning") open(ClauseKind::Returning, j, j + 1);
      continue;
    }
    if (w == "select" || (w == "perform" && j == verb)) {
      if (kind == QueryKind::Select && (ranges.empty() || ranges.back().kind == ClauseKind::With)) {
        open(ClauseKind::Select, j, j + 1);
      }
    } else if (w == "update" && j == verb) {
      open(ClauseKind::Update, j, j + 1);
    } else if (w == "delete" && j == verb) {
      open(ClauseKind::Delete, j, j + 1);
    } else if (w == "set" && kind == QueryKind::Update) {
      open(ClauseKind::Set, j, j + 1);
    } else if (w == "into" && kind == QueryKind::Select) {
      open(ClauseKind::Into, j, j + 1);
    } else if (w == "from" && kind != QueryKind::Delete) {
      open(ClauseKind::From, j, j + 1);
    } else if (w == "using" && kind == QueryKind::Delete) {
      open(ClauseKind::From, j, j + 1);
    } else if (w == "where") {
      open(ClauseKind::Where, j, j + 1);
    } else if (w == "group" && next_is("by")) {
      open(ClauseKind::GroupBy, j, j + 2);
    } else if (w == "having") {
      open(ClauseKind::Having, j, j + 1);
    } else if (w == "order" && next_is("by")) {
      open(ClauseKind::OrderBy, j, j + 2);
    } else if (w == "limit") {
      open(ClauseKind::Limit, j, j + 1);
    } else if (w == "offset") {
      open(ClauseKind::Offset, j, j + 1);
    } else if (w == "fetch") {
      open(ClauseKind::Fetch, j, j + 1);
    } else if (w == "returning" && kind != QueryKind::Select) {
      open(ClauseKind::Returning, j, j + 1);
    } else if (w == "join") {
      {
        std::size_t at = j;
        while (at > b && t[at - 1].is_word() &&
               (t[at - 1].value == "outer" || t[at - 1].value == "left" || t[at - 1].value == "right" ||
                t[at - 1].value == "full" || t[at - 1].value == "inner" || t[at - 1].value == "cross" ||
                t[at - 1].value == "natural")) {
          --at;
        }
        open(ClauseKind::Join, at, j + 1);
      }
    } else if ((w == "union" || w == "intersect" || w == "except") && kind == QueryKind::Select) {
      ClauseKind k = w == "union" ? ClauseKind::Union : w == "intersect" ? ClauseKind::Intersect : ClauseKind::Except;
      std::size_t body = j + 1;
      if (body < e && (t[body].is_keyword("all") || t[body].is_keyword("distinct"))) ++body;
      open(k, j, body);
      stop = true;
    }
  }
  if (ranges.empty()) return {};

  std::map<ClauseKind, int> counters;
  std::vector<EntityId> clauses;
  for (const auto& r : ranges) {
    std::string cname = "$" + clause_name(r.kind) + std::to_string(++counters[r.kind]);
    EntityId c = add(EntityKind::Clause, cname, q, ent(q).path.child(seg(cname)));
    ent(c).clause_kind = r.kind;
    ent(c).root = cx.root;
    ent(c).span = tspan(cx, r.b, r.e);
    clauses.push_back(c);
  }

  Scope scope;
  scope.parent = parent;

  // CTEs first: later ones and the main statement see earlier ones.
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    if (ranges[k].kind != ClauseKind::With) continue;
    std::size_t j = ranges[k].body;
    std::size_t end = ranges[k].e;
    if (j < end && t[j].is_keyword("recursive")) ++j;
    while (j < end) {
      if (!t[j].is_name()) break;
      Cte cte;
      cte.name = t[j].value;
      ++j;
      std::vector<std::string> declared;
      if (j < end && t[j].kind == TokenKind::LParen) {
        std::size_t c = close_paren(cx, j, end);
        for (std::size_t x = j + 1; x < c; ++x) {
          if (t[x].is_name()) declared.push_back(t[x].value);
        }
        j = c + 1;
      }
      while (j < end && t[j].kind != TokenKind::LParen) ++j;
      if (j >= end) break;
      std::size_t c = close_paren(cx, j, end);
      EntityId d = derived_table(cx, clauses[k]);
      auto outs = query(cx, j + 1, c, d, "$query", &scope);
      if (!declared.empty()) {
        cte.columns = declared;
      } else {
        for (const auto& o : outs) cte.columns.push_back(o.name);
      }
      scope.ctes.push_back(std::move(cte));
      j = c + 1;
      if (j < end && t[j].kind == TokenKind::Comma) ++j;
    }
  }

  // Sources.
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const auto& r = ranges[k];
    switch (r.kind) {
      case ClauseKind::From:
        from_items(cx, r.body, r.e, clauses[k], scope);
        break;
      case ClauseKind::Join: {
        std::size_t stop_at = r.e;
        std::size_t on = find_kw(cx, r.body, r.e, "on");
        std::size_t us = find_kw(cx, r.body, r.e, "using");
        stop_at = std::min(on, us);
        from_item(cx, r.body, stop_at, clauses[k], scope);
        break;
      }
      case ClauseKind::Update:
      case ClauseKind::Delete: {
        std::size_t j = r.body;
        if (r.kind == ClauseKind::Delete && j < r.e && t[j].is_keyword("from")) ++j;
        if (j < r.e && t[j].is_keyword("only")) ++j;
        std::size_t after = j;
        relation_target(cx, j, r.e, clauses[k], scope, &after);
        break;
      }
      default:
        break;
    }
  }

  std::vector<Output> outputs;
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const auto& r = ranges[k];
    EntityId c = clauses[k];
    switch (r.kind) {
      case ClauseKind::Select: {
        auto outs = select_items(cx, r.body, r.e, c, scope);
        if (outputs.empty()) outputs = std::move(outs);
        for (const auto& o : outputs) scope.aliases.push_back(o.name);
        break;
      }
      case ClauseKind::Join: {
        std::size_t on = find_kw(cx, r.body, r.e, "on");
        std::size_t us = find_kw(cx, r.body, r.e, "using");
        if (on < r.e) {
          expr(cx, on + 1, r.e, c, scope);
        } else if (us < r.e) {
          for (std::size_t x = us + 1; x < r.e; ++x) {
            if (!t[x].is_name()) continue;
            NameSeq ns = name_seq(cx, x, x + 1);
            resolve_name(cx, ns, c, scope, -1);
          }
        }
        break;
      }
      case ClauseKind::Set: {
        EntityId target = scope.sources.empty() ? kNoEntity : scope.sources.front().relation;
        for (auto [ib, ie] : split_commas(cx, r.body, r.e)) {
          std::size_t eq = ib;
          while (eq < ie && !t[eq].is_op("=")) ++eq;
          for (std::size_t x = ib; x < eq; ++x) {
            if (!t[x].is_name()) continue;
            NameSeq ns = name_seq(cx, x, eq);
            EntityId col = target == kNoEntity ? kNoEntity : m_.child_named(target, ns.parts.back(), EntityKind::Column);
            add_ref(cx, ReferenceKind::ColumnReference, c, ns, ns.parts.size() - 1, ns.parts.size() - 1, col, -1);
            x = ns.next - 1;
          }
          expr(cx, eq + 1, ie, c, scope);
        }
        break;
      }
      case ClauseKind::Insert: {
        std::size_t j = r.body;
        if (j < r.e && t[j].is_keyword("into")) ++j;
        Scope ins;
        ins.parent = &scope;
        std::size_t after = j;
        relation_target(cx, j, r.e, c, ins, &after);
        EntityId target = ins.sources.empty() ? kNoEntity : ins.sources.front().relation;
        j = after;
        if (j < r.e && t[j].kind == TokenKind::LParen && !(j + 1 < r.e && starts_query(t[j + 1]))) {
          std::size_t cl = close_paren(cx, j, r.e);
          for (std::size_t x = j + 1; x < cl; ++x) {
            if (!t[x].is_name()) continue;
            NameSeq ns = name_seq(cx, x, x + 1);
            EntityId col = target == kNoEntity ? kNoEntity : m_.child_named(target, ns.parts[0], EntityKind::Column);
            add_ref(cx, ReferenceKind::ColumnReference, c, ns, 0, 0, col, -1);
          }
          j = cl + 1;
        }
        std::size_t conflict = find_kw(cx, j, r.e, "on");
        if (j < r.e && (t[j].is_keyword("select") || t[j].is_keyword("with") ||
                        (t[j].kind == TokenKind::LParen && j + 1 < r.e && starts_query(t[j + 1])))) {
          EntityId d = derived_table(cx, c);
          query(cx, j, conflict, d, "$query", &scope);
          expr(cx, conflict, r.e, c, ins);
        } else {
          expr(cx, j, r.e, c, ins);
        }
        break;
      }
      case ClauseKind::Union:
      case ClauseKind::Intersect:
      case ClauseKind::Except: {
        EntityId d = derived_table(cx, c);
        query(cx, r.body, r.e, d, "$query", parent);
        break;
      }
      case ClauseKind::OrderBy:
        scope.aliases_visible = true;
        expr(cx, r.body, r.e, c, scope);
        scope.aliases_visible = false;
        break;
      case ClauseKind::Into: {
        std::size_t j = r.body;
        if (j < r.e && t[j].is_keyword("strict")) ++j;
        expr(cx, j, r.e, c, scope);
        break;
      }
      case ClauseKind::Where:
      case ClauseKind::GroupBy:
      case ClauseKind::Having:
      case ClauseKind::Limit:
      case ClauseKind::Offset:
      case ClauseKind::Fetch:
      case ClauseKind::Returning:
        expr(cx, r.body, r.e, c, scope);
        break;
      default:
        break;
    }
  }
  return outputs;
}

std::size_t ModelBuilder::alias_of(const Cx& cx, std::size_t i, std::size_t e, Source& src) const {
  const auto& t = cx.toks;
  if (i < e && t[i].is_keyword("as")) ++i;
  if (i < e && t[i].is_name() && !is_keyword_token(t[i])) {
    src.name = t[i].value;
    src.aliased = true;
    ++i;
    if (i < e && t[i].kind == TokenKind::LParen) {
      std::size_t c = close_paren(cx, i, e);
      std::vector<std::string> cols;
      for (std::size_t x = i + 1; x < c; ++x) {
        if (t[x].is_name()) cols.push_back(t[x].value);
      }
      if (!cols.empty()) {
        src.columns = cols;
        src.derived = true;
      }
      i = c + 1;
    }
  }
  return i;
}

void ModelBuilder::relation_target(Cx& cx, std::size_t b, std::size_t e, EntityId clause, Scope& scope,
                                   std::size_t* after) {
  const auto& t = cx.toks;
  *after = b;
  if (b >= e || !t[b].is_name()) return;
  NameSeq ns = name_seq(cx, b, e);
  Source src;
  src.name = ns.parts.back();
  EntityId rel = resolve_relation(ns.parts, cx.ns);
  src.relation = rel;
  if (rel != kNoEntity && m_.entities_[rel].kind == EntityKind::View) analyze_view(rel);
  src.from_refs.push_back(add_ref(cx, ReferenceKind::TableReference, clause, ns, 0, ns.parts.size() - 1, rel, -1));
  std::size_t j = ns.next;
  if (j < e && !t[j].is_keyword("set")) j = alias_of(cx, j, e, src);
  *after = j;
  scope.sources.push_back(std::move(src));
}

void ModelBuilder::from_items(Cx& cx, std::size_t b, std::size_t e, EntityId clause, Scope& scope) {
  for (auto [ib, ie] : split_commas(cx, b, e)) from_item(cx, ib, ie, clause, scope);
}

void ModelBuilder::from_item(Cx& cx, std::size_t b, std::size_t e, EntityId clause, Scope& scope) {
  const auto& t = cx.toks;
  while (b < e && (t[b].is_keyword("only") || t[b].is_keyword("lateral"))) ++b;
  if (b >= e) return;
  if (t[b].kind == TokenKind::LParen) {
    std::size_t c = close_paren(cx, b, e);
    if (b + 1 < e && starts_query(t[b + 1])) {
      EntityId d = derived_table(cx, clause);
      Source src;
      src.derived = true;
      Scope outer;
      outer.parent = scope.parent;
      outer.ctes = scope.ctes;
      for (const auto& o : query(cx, b + 1, c, d, "$query", &outer)) src.columns.push_back(o.name);
      alias_of(cx, c + 1, e, src);
      scope.sources.push_back(std::move(src));
    } else {
      from_items(cx, b + 1, c, clause, scope);
    }
    return;
  }
  if (!t[b].is_name()) return;
  NameSeq ns = name_seq(cx, b, e);
  if (ns.next < e && t[ns.next].kind == TokenKind::LParen) {
    // set-returning function in FROM
    std::size_t c = close_paren(cx, ns.next, e);
    std::size_t argc = count_args(cx, ns.next, c);
    EntityId fn = resolve_function(ns.parts, argc, cx.ns);
    if (fn != kNoEntity || !(ns.parts.size() == 1 && is_builtin_function(ns.parts[0]))) {
      add_ref(cx, ReferenceKind::StoredProcedureCall, clause, ns, 0, ns.parts.size() - 1, fn, -1);
      m_.references_.back().arg_count = argc;
    }
    expr(cx, ns.next + 1, c, clause, scope);
    Source src;
    src.derived = true;
    src.name = ns.parts.back();
    alias_of(cx, c + 1, e, src);
    scope.sources.push_back(std::move(src));
    return;
  }
  if (ns.parts.size() == 1) {
    if (const Cte* cte = find_cte(scope, ns.parts[0])) {
      Source src;
      src.derived = true;
      src.name = cte->name;
      src.columns = cte->columns;
      alias_of(cx, ns.next, e, src);
      scope.sources.push_back(std::move(src));
      return;
    }
  }
  std::size_t after = b;
  relation_target(cx, b, e, clause, scope, &after);
}

std::vector<std::string> ModelBuilder::expand_star(const Scope& scope, const std::string* qualifier) {
  std::vector<std::string> out;
  for (const auto& src : scope.sources) {
    if (qualifier && src.name != *qualifier) continue;
    if (src.derived || src.relation == kNoEntity) {
      out.insert(out.end(), src.columns.begin(), src.columns.end());
    } else {
      auto cols = relation_columns(src.relation);
      out.insert(out.end(), cols.begin(), cols.end());
    }
  }
  return out;
}

std::vector<ModelBuilder::Output> ModelBuilder::select_items(Cx& cx, std::size_t b, std::size_t e, EntityId clause,
                                                             Scope& scope) {
  const auto& t = cx.toks;
  std::vector<Output> outs;
  if (b < e && t[b].is_keyword("all")) ++b;
  if (b < e && t[b].is_keyword("distinct")) {
    ++b;
    if (b < e && t[b].is_keyword("on") && b + 1 < e && t[b + 1].kind == TokenKind::LParen) {
      std::size_t c = close_paren(cx, b + 1, e);
      expr(cx, b + 2, c, clause, scope);
      b = c + 1;
    }
  }
  int idx = 0;
  for (auto [ib, ie] : split_commas(cx, b, e)) {
    SelectItem si;
    si.span = tspan(cx, ib, ie);
    const int item = idx++;
    // bare and qualified wildcards
    if (ie == ib + 1 && t[ib].is_op("*")) {
      si.wildcard = true;
      si.expr_span = si.span;
      for (const auto& src : scope.sources) {
        for (std::size_t r : src.from_refs) m_.references_[r].wildcard = true;
      }
      for (auto& n : expand_star(scope, nullptr)) outs.push_back({n, -1});
      ent(clause).select_items.push_back(si);
      continue;
    }
    if (t[ib].is_name()) {
      NameSeq ns = name_seq(cx, ib, ie);
      if (ns.star && ns.next == ie) {
        si.wildcard = true;
        si.expr_span = si.span;
        resolve_name(cx, ns, clause, scope, item);
        for (auto& n : expand_star(scope, &ns.parts.back())) outs.push_back({n, -1});
        ent(clause).select_items.push_back(si);
        continue;
      }
    }
    // alias detection
    std::set<std::size_t> type_tokens;
    {
      int depth = 0;
      for (std::size_t x = ib; x < ie; ++x) {
        if (t[x].kind == TokenKind::LParen) ++depth;
        if (t[x].kind == TokenKind::RParen) --depth;
        if (depth == 0 && t[x].kind == TokenKind::Cast) {
          std::size_t y = skip_type(cx, x + 1, ie);
          for (std::size_t z = x + 1; z < y; ++z) type_tokens.insert(z);
        }
      }
    }
    std::size_t ee = ie;
    if (ie - ib >= 3 && t[ie - 2].is_keyword("as") && t[ie - 1].is_name()) {
      si.has_alias = true;
      si.alias_span = t[ie - 1].span;
      si.output_name = t[ie - 1].value;
      ee = ie - 2;
    } else if (ie - ib >= 2 && t[ie - 1].is_name() && !is_keyword_token(t[ie - 1]) && !type_tokens.count(ie - 1)) {
      const Token& p = t[ie - 2];
      bool ends = (p.is_name() && !is_keyword_token(p)) || p.kind == TokenKind::Number ||
                  p.kind == TokenKind::String || p.kind == TokenKind::RParen || p.kind == TokenKind::RBracket;
      if (ends && !type_tokens.count(ie - 2)) {
        si.has_alias = true;
        si.alias_span = t[ie - 1].span;
        si.output_name = t[ie - 1].value;
        ee = ie - 1;
      }
    }
    si.expr_span = tspan(cx, ib, ee);
    if (t[ib].is_name() && !(is_keyword_token(t[ib]) && !(ib + 1 < ee && t[ib + 1].kind == TokenKind::Dot))) {
      NameSeq ns = name_seq(cx, ib, ee);
      if (ns.next == ee && !ns.star) si.bare_column = true;
      if (!si.has_alias) {
        if (ns.next < ee && t[ns.next].kind == TokenKind::LParen) {
          si.output_name = ns.parts.back();
          if (ns.parts.back() == "cast") {
            std::size_t x = ns.next + 1;
            if (x < ee && t[x].is_name()) si.output_name = name_seq(cx, x, ee).parts.back();
          }
        } else if (ns.next == ee || (ns.next < ee && t[ns.next].kind == TokenKind::Cast)) {
          si.output_name = ns.parts.back();
        }
      }
    } else if (!si.has_alias && t[ib].is_keyword("case")) {
      si.output_name = "case";
    }
    if (si.output_name.empty()) si.output_name = "?column?";
    expr(cx, ib, ee, clause, scope, item);
    outs.push_back({si.output_name, item});
    ent(clause).select_items.push_back(si);
  }
  return outs;
}

// ---------------------------------------------------------------------------
// Roots

void ModelBuilder::analyze_view(EntityId view) {
  int& st = view_state_[view];
  if (st != 0) return;
  st = 1;
  const ViewDef& v = view_defs_.at(view);
  Cx cx;
  cx.root = view;
  cx.checked = true;
  cx.ns = v.ns;
  try {
    cx.toks = tokenize(v.query);
  } catch (const Error& err) {
    m_.diagnostics_.push_back({Diagnostic::Severity::Error, ErrorCode::SyntaxError, err.what(),
                               ent(view).path.str(), err.span().value_or(Span{})});
    view_state_[view] = 2;
    return;
  }
  std::size_t e = cx.toks.size() - 1;  // drop End
  while (e > 0 && cx.toks[e - 1].kind == TokenKind::Semicolon) --e;
  auto outs = query(cx, 0, e, view, "$query", nullptr);
  std::set<std::string> seen;
  int ordinal = 0;
  for (const auto& o : outs) {
    if (!seen.insert(o.name).second) continue;
    EntityId c = add(EntityKind::Column, o.name, view, ent(view).path.child(seg(o.name)));
    ent(c).ordinal = ++ordinal;
    ent(c).select_item = o.item;
  }
  view_state_[view] = 2;
}

void ModelBuilder::declaration(Cx& cx, std::size_t b, std::size_t e) {
  const auto& t = cx.toks;
  if (b >= e || !t[b].is_name()) return;
  const std::string name = t[b].value;
  EntityId fn = cx.function;
  EntityId var = add(EntityKind::LocalVariable, name, fn, ent(fn).path.child(seg(name)));
  ent(var).root = cx.root;
  ent(var).span = t[b].span;
  cx.locals[name] = var;
  std::size_t j = b + 1;
  if (j < e && t[j].is_keyword("constant")) ++j;
  if (j < e && t[j].is_keyword("alias")) {
    ent(var).declared_type = "alias";
    Scope none;
    expr(cx, j + 1, e, var, none);
    return;
  }
  if (j < e && t[j].is_keyword("cursor")) {
    std::size_t q = find_kw(cx, j, e, "for");
    ent(var).declared_type = "refcursor";
    if (q < e) query(cx, q + 1, e, fn, "$query" + std::to_string(++cx.queries), nullptr);
    return;
  }
  std::size_t type_end = j;
  while (type_end < e) {
    const Token& tk = t[type_end];
    if (tk.kind == TokenKind::Assign || tk.is_op("=") || tk.is_keyword("default") || tk.is_keyword("not") ||
        tk.is_keyword("collate")) {
      break;
    }
    ++type_end;
  }
  if (type_end > j) {
    std::string raw;
    for (std::size_t x = j; x < type_end; ++x) {
      if (x > j && t[x].kind != TokenKind::Dot && t[x - 1].kind != TokenKind::Dot && t[x].kind != TokenKind::LParen &&
          t[x].kind != TokenKind::RParen && t[x - 1].kind != TokenKind::LParen && !t[x].is_op("%") &&
          !t[x - 1].is_op("%")) {
        raw += ' ';
      }
      raw += t[x].text;
    }
    std::size_t pct = j;
    while (pct < type_end && !t[pct].is_op("%")) ++pct;
    Scope none;
    if (pct < type_end && pct + 1 < type_end) {
      // t.c%TYPE or t%ROWTYPE
      bool rowtype = t[pct + 1].is_keyword("rowtype");
      ent(var).declared_type = raw;
      if (t[j].is_name()) {
        NameSeq ns = name_seq(cx, j, pct);
        if (rowtype) {
          EntityId rel = resolve_relation(ns.parts, cx.ns);
          add_ref(cx, ReferenceKind::TableReference, var, ns, 0, ns.parts.size() - 1, rel, -1);
        } else if (ns.parts.size() >= 2) {
          std::vector<std::string> relparts(ns.parts.begin(), ns.parts.end() - 1);
          EntityId rel = resolve_relation(relparts, cx.ns);
          add_ref(cx, ReferenceKind::TableReference, var, ns, 0, ns.parts.size() - 2, rel, -1);
          EntityId col = rel == kNoEntity ? kNoEntity : m_.child_named(rel, ns.parts.back(), EntityKind::Column);
          add_ref(cx, ReferenceKind::ColumnReference, var, ns, ns.parts.size() - 1, ns.parts.size() - 1, col, -1);
        } else {
          // param%TYPE
          resolve_variable(cx, ns, var, -1);
        }
      }
    } else {
      std::string norm = normalize_type(raw);
      ent(var).declared_type = norm;
      NameSeq ns;
      ns.parts.push_back(norm);
      ns.spans.push_back(tspan(cx, j, type_end));
      ns.quoted.push_back(false);
      if (t[j].is_name() && !kBuiltinTypes.count(norm)) {
        NameSeq rn = name_seq(cx, j, type_end);
        EntityId rel = resolve_relation(rn.parts, cx.ns);
        if (rel != kNoEntity) {
          add_ref(cx, ReferenceKind::TableReference, var, rn, 0, rn.parts.size() - 1, rel, -1);
        } else {
          add_ref(cx, ReferenceKind::TypeReference, var, ns, 0, 0, type_entity(norm), -1);
        }
      } else {
        add_ref(cx, ReferenceKind::TypeReference, var, ns, 0, 0, type_entity(norm), -1);
      }
    }
  }
  // default expression
  std::size_t d = type_end;
  while (d < e && !(t[d].kind == TokenKind::Assign || t[d].is_op("=") || t[d].is_keyword("default"))) ++d;
  if (d < e) {
    Scope none;
    expr(cx, d + 1, e, fn, none);
  }
}

void ModelBuilder::statement(Cx& cx, std::size_t b, std::size_t e) {
  const auto& t = cx.toks;
  EntityId fn = cx.function;
  Scope none;
  auto until = [&](std::size_t from, std::string_view kw) { return find_kw(cx, from, e, kw); };
  while (b < e) {
    const Token& tk = t[b];
    if (tk.is_op("<<")) {
      while (b < e && !t[b].is_op(">>")) ++b;
      ++b;
      continue;
    }
    if (cx.in_declare && !tk.is_keyword("begin")) {
      if (tk.is_keyword("declare")) {
        ++b;
        continue;
      }
      declaration(cx, b, e);
      return;
    }
    if (tk.kind != TokenKind::Identifier) break;
    const std::string& w = tk.value;
    if (w == "declare") {
      cx.in_declare = true;
      ++b;
      continue;
    }
    if (w == "begin") {
      cx.in_declare = false;
      ++b;
      continue;
    }
    if (w == "end") return;
    if (w == "exception") {
      cx.in_exception = true;
      ++b;
      continue;
    }
    if (w == "when") {
      std::size_t th = until(b + 1, "then");
      if (!cx.in_exception) expr(cx, b + 1, th, fn, none);
      b = th + 1;
      continue;
    }
    if (w == "if" || w == "elsif") {
      std::size_t th = until(b + 1, "then");
      expr(cx, b + 1, th, fn, none);
      b = th + 1;
      continue;
    }
    if (w == "else" || w == "loop") {
      ++b;
      continue;
    }
    if (w == "while") {
      std::size_t lp = until(b + 1, "loop");
      expr(cx, b + 1, lp, fn, none);
      b = lp + 1;
      continue;
    }
    if (w == "for" || w == "foreach") {
      std::size_t in = until(b + 1, "in");
      for (std::size_t x = b + 1; x < in; ++x) {
        if (t[x].is_name() && !cx.locals.count(t[x].value)) cx.implicit.insert(t[x].value);
      }
      std::size_t j = in + 1;
      if (j < e && t[j].is_keyword("reverse")) ++j;
      std::size_t lp = until(j, "loop");
      if (j < lp && (t[j].is_keyword("select") || t[j].is_keyword("with"))) {
        query(cx, j, lp, fn, "$query" + std::to_string(++cx.queries), nullptr);
      } else {
        expr(cx, j, lp, fn, none);
      }
      b = lp + 1;
      continue;
    }
    if (w == "case") {
      std::size_t wh = until(b + 1, "when");
      expr(cx, b + 1, wh, fn, none);
      b = wh;
      continue;
    }
    if (w == "return") {
      std::size_t j = b + 1;
      if (j < e && t[j].is_keyword("next")) ++j;
      if (j < e && t[j].is_word() && t[j].value == "query") {
        ++j;
        if (j < e && starts_query(t[j])) {
          query(cx, j, e, fn, "$query" + std::to_string(++cx.queries), nullptr);
          return;
        }
      }
      expr(cx, j, e, fn, none);
      return;
    }
    if (w == "perform" || starts_query(tk) || w == "insert" || w == "update" || w == "delete") {
      query(cx, b, e, fn, "$query" + std::to_string(++cx.queries), nullptr);
      return;
    }
    if (w == "raise") {
      std::size_t j = b + 1;
      while (j < e && t[j].is_word() && t[j].kind != TokenKind::String) ++j;
      if (j < e && t[j].kind == TokenKind::String) ++j;
      std::size_t us = until(j, "using");
      expr(cx, j, us, fn, none);
      if (us < e) expr(cx, us + 1, e, fn, none);
      return;
    }
    if (w == "null") return;
    break;
  }
  if (b >= e) return;
  // assignment: target := expr
  std::size_t as = b;
  int depth = 0;
  for (std::size_t j = b; j < e; ++j) {
    if (t[j].kind == TokenKind::LParen || t[j].kind == TokenKind::LBracket) ++depth;
    if (t[j].kind == TokenKind::RParen || t[j].kind == TokenKind::RBracket) --depth;
    if (depth == 0 && t[j].kind == TokenKind::Assign) {
      as = j;
      break;
    }
  }
  if (as > b && t[b].is_name()) {
    NameSeq ns = name_seq(cx, b, as);
    if (!resolve_variable(cx, ns, fn, -1)) {
      add_ref(cx, ReferenceKind::VariableReference, fn, ns, 0, 0, kNoEntity, -1);
    }
    std::size_t j = as + 1;
    if (j < e && starts_query(t[j]) && !t[j].is_keyword("values")) {
      query(cx, j, e, fn, "$query" + std::to_string(++cx.queries), nullptr);
    } else {
      expr(cx, j, e, fn, none);
    }
    return;
  }
  expr(cx, b, e, fn, none);
}

void ModelBuilder::analyze_function(EntityId fn, const FunctionDef& f) {
  Cx cx;
  cx.root = fn;
  cx.checked = false;
  cx.ns = f.ns;
  cx.function = fn;
  if (normalize_type(f.returns) == "trigger") {
    // record and special variables of trigger procedures
    for (const char* v : {"new", "old", "tg_op", "tg_name", "tg_when", "tg_level", "tg_table_name", "tg_table_schema",
                          "tg_relid", "tg_nargs", "tg_argv"}) {
      cx.implicit.insert(v);
    }
  }
  int ordinal = 0;
  for (EntityId c : ent(fn).children) {
    if (ent(c).kind != EntityKind::Parameter) continue;
    ++ordinal;
    cx.params["$" + std::to_string(ordinal)] = c;
    if (ent(c).name[0] != '$') cx.params[ent(c).name] = c;
  }
  try {
    cx.toks = tokenize(f.body);
  } catch (const Error& err) {
    m_.diagnostics_.push_back({Diagnostic::Severity::Warning, ErrorCode::SyntaxError, err.what(),
                               ent(fn).path.str(), err.span().value_or(Span{})});
    return;
  }
  const std::size_t e = cx.toks.size() - 1;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t j = 0; j <= e; ++j) {
    auto k = cx.toks[j].kind;
    if (k == TokenKind::LParen || k == TokenKind::LBracket) ++depth;
    if (k == TokenKind::RParen || k == TokenKind::RBracket) --depth;
    if ((k == TokenKind::Semicolon && depth <= 0) || j == e) {
      if (j > start) statement(cx, start, j);
      start = j + 1;
      depth = 0;
    }
  }
}

void ModelBuilder::analyze_constraint(EntityId con, const TableDef& t, const ConstraintDef& c) {
  ConstraintText rt = render_constraint(c, t.ns);
  ent(con).root = con;
  ent(con).source_text = rt.text;
  ent(con).expr_offset = rt.expr_offset;
  ent(con).has_expression = c.kind == ConstraintKind::Check || c.kind == ConstraintKind::Default;
  ent(con).span = {0, utf8::length(rt.text)};
  Cx cx;
  cx.root = con;
  cx.checked = true;
  cx.ns = t.ns;
  try {
    cx.toks = tokenize(rt.text);
  } catch (const Error& err) {
    m_.diagnostics_.push_back({Diagnostic::Severity::Error, ErrorCode::SyntaxError, err.what(),
                               ent(con).path.str(), err.span().value_or(Span{})});
    return;
  }
  EntityId table = ent(con).container;
  auto tokens_in = [&](Span s) {
    std::pair<std::size_t, std::size_t> r{cx.toks.size() - 1, cx.toks.size() - 1};
    bool first = true;
    for (std::size_t i = 0; i + 1 < cx.toks.size(); ++i) {
      if (cx.toks[i].span.start >= s.start && cx.toks[i].span.end <= s.end) {
        if (first) r.first = i;
        first = false;
        r.second = i + 1;
      }
    }
    return r;
  };
  auto column_ref = [&](Span s, EntityId rel) {
    auto [b, e] = tokens_in(s);
    if (b >= e) return;
    NameSeq ns = name_seq(cx, b, e);
    EntityId col = rel == kNoEntity ? kNoEntity : m_.child_named(rel, ns.parts.back(), EntityKind::Column);
    add_ref(cx, ReferenceKind::ColumnReference, con, ns, 0, 0, col, -1);
  };
  for (const Span& s : rt.column_spans) column_ref(s, table);
  if (c.kind == ConstraintKind::ForeignKey) {
    auto [b, e] = tokens_in(rt.ref_table_span);
    EntityId rel = kNoEntity;
    if (b < e) {
      NameSeq ns = name_seq(cx, b, e);
      rel = resolve_relation(ns.parts, t.ns);
      if (rel != kNoEntity && ent(rel).kind != EntityKind::Table) rel = kNoEntity;
      add_ref(cx, ReferenceKind::TableReference, con, ns, 0, ns.parts.size() - 1, rel, -1);
    }
    for (const Span& s : rt.ref_column_spans) column_ref(s, rel);
    if (rel != kNoEntity && rel != table) ent(con).fk_node = true;
  }
  if (ent(con).has_expression) {
    Scope scope;
    Source src;
    src.name = t.name;
    src.relation = table;
    scope.sources.push_back(src);
    auto [b, e] = tokens_in({rt.expr_offset, utf8::length(rt.text)});
    expr(cx, b, e, con, scope);
  }
}

void ModelBuilder::analyze_trigger(EntityId trg, const TriggerDef& td) {
  TriggerText rt = render_trigger(td, td.ns);
  ent(trg).root = trg;
  ent(trg).source_text = rt.text;
  ent(trg).expr_offset = rt.when_offset;
  ent(trg).has_expression = !td.when.empty();
  ent(trg).span = {0, utf8::length(rt.text)};
  Cx cx;
  cx.root = trg;
  cx.checked = true;
  cx.ns = td.ns;
  try {
    cx.toks = tokenize(rt.text);
  } catch (const Error& err) {
    m_.diagnostics_.push_back({Diagnostic::Severity::Error, ErrorCode::SyntaxError, err.what(),
                               ent(trg).path.str(), err.span().value_or(Span{})});
    return;
  }
  auto tokens_in = [&](Span s) {
    std::pair<std::size_t, std::size_t> r{0, 0};
    bool first = true;
    for (std::size_t i = 0; i + 1 < cx.toks.size(); ++i) {
      if (cx.toks[i].span.start >= s.start && cx.toks[i].span.end <= s.end) {
        if (first) r.first = i;
        first = false;
        r.second = i + 1;
      }
    }
    return r;
  };
  EntityId table = kNoEntity;
  {
    auto [b, e] = tokens_in(rt.table_span);
    if (b < e) {
      NameSeq ns = name_seq(cx, b, e);
      table = resolve_relation(ns.parts, td.ns);
      add_ref(cx, ReferenceKind::TableReference, trg, ns, 0, ns.parts.size() - 1, table, -1);
    }
  }
  for (const Span& s : rt.update_column_spans) {
    auto [b, e] = tokens_in(s);
    if (b >= e) continue;
    NameSeq ns = name_seq(cx, b, e);
    EntityId col = table == kNoEntity ? kNoEntity : m_.child_named(table, ns.parts[0], EntityKind::Column);
    add_ref(cx, ReferenceKind::ColumnReference, trg, ns, 0, 0, col, -1);
  }
  if (!td.when.empty()) {
    cx.trigger_table = table;
    Scope scope;
    auto [b, e] = tokens_in({rt.when_offset, rt.when_offset + utf8::length(td.when)});
    expr(cx, b, e, trg, scope);
    cx.trigger_table = kNoEntity;
  }
  {
    auto [b, e] = tokens_in(rt.function_span);
    if (b < e) {
      NameSeq ns = name_seq(cx, b, e);
      EntityId fn = resolve_function(ns.parts, 0, td.ns);
      add_ref(cx, ReferenceKind::StoredProcedureCall, trg, ns, 0, ns.parts.size() - 1, fn, -1);
    }
  }
}

void ModelBuilder::diagnose() {
  for (const auto& r : m_.references_) {
    if (r.resolved) continue;
    std::string text;
    for (std::size_t i = 0; i < r.name_parts.size(); ++i) text += (i ? "." : "") + r.name_parts[i];
    Diagnostic d;
    d.severity = r.checked ? Diagnostic::Severity::Error : Diagnostic::Severity::Warning;
    d.code = ErrorCode::UnresolvedInCheckedContext;
    d.message = std::string(r.checked ? "unresolved " : "unresolved (unchecked) ") +
                std::string(to_string(r.kind)) + " '" + text + "'";
    d.root = m_.entities_[r.root].path.str();
    d.span = r.span;
    m_.diagnostics_.push_back(std::move(d));
  }
}

SchemaModel ModelBuilder::build() {
  const Catalog& cat = m_.catalog_;
  namespace_entity(std::string(kPublic));
  for (const auto& ns : cat.namespaces) namespace_entity(ns);

  std::vector<std::pair<EntityId, const TableDef*>> tables;
  for (const auto& t : cat.tables) {
    EntityId nsid = namespace_entity(t.ns);
    EntityId id = add(EntityKind::Table, t.name, nsid, ent(nsid).path.child(seg(t.name)));
    ent(id).def_uid = t.uid;
    int ordinal = 0;
    for (const auto& c : t.columns) {
      EntityId col = add(EntityKind::Column, c.name, id, ent(id).path.child(seg(c.name)));
      ent(col).def_uid = c.uid;
      ent(col).declared_type = normalize_type(c.type);
      ent(col).ordinal = ++ordinal;
    }
    for (const auto& c : t.constraints) {
      EntityId con = add(EntityKind::Constraint, c.name, id, ent(id).path.child(seg(c.name)));
      ent(con).def_uid = c.uid;
      ent(con).constraint_kind = c.kind;
    }
    tables.emplace_back(id, &t);
  }
  std::vector<EntityId> views;
  for (const auto& v : cat.views) {
    EntityId nsid = namespace_entity(v.ns);
    EntityId id = add(EntityKind::View, v.name, nsid, ent(nsid).path.child(seg(v.name)));
    ent(id).def_uid = v.uid;
    ent(id).root = id;
    ent(id).source_text = v.query;
    ent(id).span = {0, utf8::length(v.query)};
    view_defs_[id] = v;
    views.push_back(id);
  }
  std::vector<std::pair<EntityId, const FunctionDef*>> functions;
  for (const auto& f : cat.functions) {
    EntityId nsid = namespace_entity(f.ns);
    PathSegment s = seg(f.name);
    s.signature = f.signature();
    EntityId id = add(EntityKind::StoredProcedure, f.name, nsid, ent(nsid).path.child(s));
    ent(id).def_uid = f.uid;
    ent(id).root = id;
    ent(id).source_text = f.body;
    ent(id).span = {0, utf8::length(f.body)};
    ent(id).declared_type = normalize_type(f.returns);
    int ordinal = 0;
    for (const auto& p : f.params) {
      ++ordinal;
      std::string pname = p.name.empty() ? "$" + std::to_string(ordinal) : p.name;
      EntityId pid = add(EntityKind::Parameter, pname, id, ent(id).path.child(seg(pname)));
      ent(pid).def_uid = p.uid;
      ent(pid).declared_type = normalize_type(p.type);
      ent(pid).ordinal = ordinal;
    }
    functions.emplace_back(id, &f);
  }
  std::vector<std::pair<EntityId, const TriggerDef*>> triggers;
  for (const auto& tr : cat.triggers) {
    EntityId nsid = namespace_entity(tr.ns);
    EntityId id = add(EntityKind::Trigger, tr.name, nsid, ent(nsid).path.child(seg(tr.name)));
    ent(id).def_uid = tr.uid;
    triggers.emplace_back(id, &tr);
  }

  for (EntityId v : views) analyze_view(v);
  for (auto [id, f] : functions) analyze_function(id, *f);
  for (auto [id, t] : tables) {
    for (const auto& c : t->constraints) {
      EntityId con = m_.child_named(id, c.name, EntityKind::Constraint);
      analyze_constraint(con, *t, c);
    }
  }
  for (auto [id, tr] : triggers) analyze_trigger(id, *tr);
  diagnose();

  for (const auto& e : m_.entities_) {
    if (e.def_uid != 0) m_.uid_index_[e.def_uid] = e.id;
  }
  return std::move(m_);
}

SchemaModel analyze(Catalog catalog) { return ModelBuilder(std::move(catalog)).build(); }

SchemaModel load_schema(std::string_view dump) {
  Catalog cat;
  try {
    cat = parse_dump(dump);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseFailure, std::string(to_string(e.code())) + ": " + e.what(), e.span());
  }
  SchemaModel m = analyze(std::move(cat));
  for (const auto& d : m.diagnostics()) {
    if (d.severity == Diagnostic::Severity::Error) {
      throw Error(ErrorCode::ParseFailure,
                  std::string(to_string(d.code)) + ": " + d.message + " in " + d.root, d.span);
    }
  }
  return m;
}

}  // namespace dbevo
