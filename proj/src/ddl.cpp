#include "dbevo/ddl.hpp"

#include <cctype>

#include "dbevo/entity_path.hpp"
#include "dbevo/lexer.hpp"
#include "dbevo/utf8.hpp"

namespace dbevo {

namespace {

// Lowercases outside double quotes and collapses whitespace; "varchar (20)" -> "varchar(20)".
std::string tidy_type(std::string_view raw) {
  std::string out;
  bool quoted = false;
  bool space = false;
  for (char c : raw) {
    if (c == '"') quoted = !quoted;
    if (!quoted && std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty() && c != '(' && c != ')' && c != '[' && c != ']' && c != ',' && out.back() != '(')
      out.push_back(' ');
    space = false;
    out.push_back(quoted ? c : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string trim_copy(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool is_type_prefix_pair(const std::string& a, const std::string& b) {
  return (a == "character" && b == "varying") || (a == "char" && b == "varying") ||
         (a == "double" && b == "precision") || (a == "timestamp" && (b == "with" || b == "without")) ||
         (a == "time" && (b == "with" || b == "without")) || (a == "bit" && b == "varying") ||
         (a == "national" && b == "character");
}

class Parser {
 public:
  Parser(std::string_view text, const std::vector<Token>& toks, std::size_t begin, std::size_t end)
      : text_(text), toks_(toks), pos_(begin), begin_(begin), end_(end) {
    end_token_.kind = TokenKind::End;
    std::size_t cp = end > begin ? toks[end - 1].span.end : toks[begin].span.start;
    std::size_t byte = end > begin ? toks[end - 1].byte_end : toks[begin].byte_begin;
    end_token_.span = {cp, cp};
    end_token_.byte_begin = end_token_.byte_end = byte;
  }

  Statement statement() {
    Statement st;
    st.span = {toks_[begin_].span.start, toks_[end_ - 1].span.end};
    st.text = std::string(text_.substr(toks_[begin_].byte_begin, toks_[end_ - 1].byte_end - toks_[begin_].byte_begin));
    if (accept("create")) {
      st.or_replace = accept("or");
      if (st.or_replace) expect("replace");
      if (accept("schema")) {
        st.kind = StatementKind::CreateSchema;
        if (accept("if")) {
          expect("not");
          expect("exists");
        }
        st.name.name = name();
      } else if (accept("table")) {
        st.kind = StatementKind::CreateTable;
        create_table(st);
      } else if (accept("view")) {
        st.kind = StatementKind::CreateView;
        create_view(st);
      } else if (accept("function")) {
        st.kind = StatementKind::CreateFunction;
        create_function(st);
      } else if (accept("trigger")) {
        st.kind = StatementKind::CreateTrigger;
        create_trigger(st);
      } else {
        unsupported(st);
      }
    } else if (accept("alter")) {
      if (accept("table")) {
        st.kind = StatementKind::AlterTable;
        alter_table(st);
      } else if (accept("view")) {
        st.kind = StatementKind::AlterView;
        alter_view(st);
      } else if (accept("function")) {
        st.kind = StatementKind::AlterFunction;
        alter_function(st);
      } else {
        unsupported(st);
      }
    } else if (accept("drop")) {
      st.kind = StatementKind::Drop;
      drop(st);
    } else if (accept("begin") || (peek().is_keyword("start") && peek(1).is_keyword("transaction"))) {
      if (accept("start")) expect("transaction");
      accept("transaction") || accept("work");
      st.kind = StatementKind::Begin;
    } else if (accept("commit") || accept("end")) {
      accept("transaction") || accept("work");
      st.kind = StatementKind::Commit;
    } else if (accept("rollback")) {
      accept("transaction") || accept("work");
      st.kind = StatementKind::Rollback;
    } else {
      unsupported(st);
    }
    if (!at_end()) fail("unexpected token '" + peek().text + "'");
    return st;
  }

  // Entry points used by parse_constraint_clause.
  ConstraintDef table_constraint_clause() {
    ConstraintDef c = table_constraint();
    if (!at_end()) fail("unexpected token '" + peek().text + "'");
    return c;
  }
  ConstraintDef column_constraint_clause(const std::string& column) {
    std::vector<ConstraintDef> out;
    column_constraints(column, out);
    if (out.size() != 1) fail("expected exactly one column constraint");
    if (!at_end()) fail("unexpected token '" + peek().text + "'");
    return out.front();
  }

 private:
  const Token& peek(std::size_t k = 0) const {
    std::size_t i = pos_ + k;
    return i < end_ ? toks_[i] : end_token_;
  }
  const Token& advance() {
    const Token& t = peek();
    if (pos_ < end_) ++pos_;
    return t;
  }
  bool at_end() const { return pos_ >= end_; }
  bool accept(std::string_view kw) {
    if (peek().is_keyword(kw)) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept(TokenKind k) {
    if (peek().kind == k) {
      advance();
      return true;
    }
    return false;
  }
  void expect(std::string_view kw) {
    if (!accept(kw)) fail("expected " + std::string(kw));
  }
  void expect(TokenKind k, std::string_view what) {
    if (!accept(k)) fail("expected " + std::string(what));
  }
  [[noreturn]] void fail(const std::string& msg) const { throw Error(ErrorCode::SyntaxError, msg, peek().span); }
  [[noreturn]] void unsupported(const Statement& st) const {
    throw Error(ErrorCode::UnsupportedStatement, "unsupported statement: " + st.text.substr(0, 60), st.span);
  }

  std::string name() {
    if (!peek().is_name()) fail("expected identifier");
    return advance().value;
  }

  QualifiedName qualified() {
    QualifiedName q;
    q.name = name();
    if (peek().kind == TokenKind::Dot && peek(1).is_name()) {
      advance();
      q.ns = q.name;
      q.name = name();
    }
    return q;
  }

  std::string raw(std::size_t from, std::size_t to) const {
    if (to <= from) return {};
    std::size_t b = toks_[from].byte_begin;
    std::size_t e = toks_[to - 1].byte_end;
    return std::string(text_.substr(b, e - b));
  }

  // Advances to the first depth-0 token satisfying `stop` (or the end) and returns its index.
  template <typename Stop>
  std::size_t scan(Stop stop) {
    int depth = 0;
    while (!at_end()) {
      const Token& t = peek();
      if (depth == 0 && stop(t)) break;
      if (t.kind == TokenKind::LParen || t.kind == TokenKind::LBracket) ++depth;
      if (t.kind == TokenKind::RParen || t.kind == TokenKind::RBracket) {
        if (depth == 0) break;
        --depth;
      }
      advance();
    }
    return pos_;
  }

  std::string parenthesized_raw() {
    expect(TokenKind::LParen, "'('");
    std::size_t from = pos_;
    std::size_t to = scan([](const Token&) { return false; });
    expect(TokenKind::RParen, "')'");
    return trim_copy(raw(from, to));
  }

  std::vector<std::string> name_list() {
    std::vector<std::string> out;
    expect(TokenKind::LParen, "'('");
    do {
      out.push_back(name());
    } while (accept(TokenKind::Comma));
    expect(TokenKind::RParen, "')'");
    return out;
  }

  static bool constraint_start(const Token& t) {
    return t.is_keyword("constraint") || t.is_keyword("not") || t.is_keyword("null") || t.is_keyword("default") ||
           t.is_keyword("primary") || t.is_keyword("unique") || t.is_keyword("check") || t.is_keyword("references") ||
           t.is_keyword("collate");
  }

  std::string fk_actions() {
    std::size_t from = pos_;
    while (!at_end()) {
      const Token& t = peek();
      if (t.is_keyword("on") || t.is_keyword("delete") || t.is_keyword("update") || t.is_keyword("cascade") ||
          t.is_keyword("restrict") || t.is_keyword("set") || t.is_keyword("no") || t.is_keyword("action") ||
          t.is_keyword("match") || t.is_keyword("full") || t.is_keyword("partial") || t.is_keyword("simple") ||
          t.is_keyword("deferrable") || t.is_keyword("initially") || t.is_keyword("deferred") ||
          t.is_keyword("immediate") || (t.is_keyword("not") && peek(1).is_keyword("deferrable")) ||
          ((t.is_keyword("null") || t.is_keyword("default")) && toks_[pos_ - 1].is_keyword("set"))) {
        advance();
        continue;
      }
      break;
    }
    return trim_copy(raw(from, pos_));
  }

  void references(ConstraintDef& c) {
    c.kind = ConstraintKind::ForeignKey;
    c.ref_table = qualified();
    if (peek().kind == TokenKind::LParen) c.ref_columns = name_list();
    c.fk_actions = fk_actions();
  }

  void column_constraints(const std::string& column, std::vector<ConstraintDef>& out) {
    while (!at_end() && peek().kind != TokenKind::Comma && peek().kind != TokenKind::RParen) {
      ConstraintDef c;
      c.columns = {column};
      if (accept("constraint")) c.name = name();
      if (accept("not")) {
        expect("null");
        c.kind = ConstraintKind::NotNull;
      } else if (accept("null")) {
        continue;
      } else if (accept("default")) {
        c.kind = ConstraintKind::Default;
        std::size_t from = pos_;
        advance();  // the first token always belongs to the expression
        std::size_t to = scan([](const Token& t) {
          return t.kind == TokenKind::Comma || (constraint_start(t) && !t.is_keyword("null"));
        });
        c.expression = trim_copy(raw(from, to));
      } else if (accept("primary")) {
        expect("key");
        c.kind = ConstraintKind::PrimaryKey;
      } else if (accept("unique")) {
        c.kind = ConstraintKind::Unique;
      } else if (accept("check")) {
        c.kind = ConstraintKind::Check;
        c.expression = parenthesized_raw();
      } else if (accept("references")) {
        references(c);
      } else if (accept("collate")) {
        name();
        continue;
      } else {
        fail("unexpected token '" + peek().text + "' in column definition");
      }
      out.push_back(std::move(c));
    }
  }

  ConstraintDef table_constraint() {
    ConstraintDef c;
    if (accept("constraint")) c.name = name();
    if (accept("primary")) {
      expect("key");
      c.kind = ConstraintKind::PrimaryKey;
      c.columns = name_list();
    } else if (accept("unique")) {
      c.kind = ConstraintKind::Unique;
      c.columns = name_list();
    } else if (accept("check")) {
      c.kind = ConstraintKind::Check;
      c.expression = parenthesized_raw();
    } else if (accept("foreign")) {
      expect("key");
      c.columns = name_list();
      expect("references");
      references(c);
    } else {
      fail("expected table constraint");
    }
    return c;
  }

  bool table_constraint_ahead() const {
    const Token& t = peek();
    return t.is_keyword("constraint") || t.is_keyword("primary") || t.is_keyword("unique") || t.is_keyword("check") ||
           t.is_keyword("foreign");
  }

  std::string column_type() {
    std::size_t from = pos_;
    std::size_t to = scan([](const Token& t) { return t.kind == TokenKind::Comma || constraint_start(t); });
    if (to == from) fail("expected column type");
    return tidy_type(raw(from, to));
  }

  void column_def(ColumnDef& col, std::vector<ConstraintDef>& cons) {
    col.name = name();
    col.type = column_type();
    column_constraints(col.name, cons);
  }

  void create_table(Statement& st) {
    if (accept("if")) {
      expect("not");
      expect("exists");
    }
    QualifiedName q = qualified();
    st.table.ns = q.ns.empty() ? std::string(kPublic) : q.ns;
    st.table.name = q.name;
    st.name = q;
    expect(TokenKind::LParen, "'('");
    if (peek().kind != TokenKind::RParen) {
      do {
        if (table_constraint_ahead()) {
          st.table.constraints.push_back(table_constraint());
        } else {
          ColumnDef col;
          column_def(col, st.table.constraints);
          st.table.columns.push_back(std::move(col));
        }
      } while (accept(TokenKind::Comma));
    }
    expect(TokenKind::RParen, "')'");
    if (!at_end()) unsupported(st);
  }

  void create_view(Statement& st) {
    QualifiedName q = qualified();
    st.view.ns = q.ns.empty() ? std::string(kPublic) : q.ns;
    st.view.name = q.name;
    st.name = q;
    if (peek().kind == TokenKind::LParen || peek().is_keyword("with")) unsupported(st);
    expect("as");
    if (at_end()) fail("expected view query");
    st.view.query = trim_copy(raw(pos_, end_));
    pos_ = end_;
  }

  // One parameter: [mode] [name] type [DEFAULT expr | = expr]
  ParamDef param(std::size_t from, std::size_t to) {
    ParamDef p;
    std::size_t i = from;
    auto word = [&](std::size_t k) { return k < to && toks_[k].is_word() ? toks_[k].value : std::string(); };
    std::string w = word(i);
    if (w == "in" || w == "out" || w == "inout" || w == "variadic") {
      p.mode = w == "in" ? "" : w;
      ++i;
      if (w == "in" && word(i) == "out") {
        p.mode = "inout";
        ++i;
      }
    }
    std::size_t type_end = to;
    for (std::size_t k = i; k < to; ++k) {
      if (toks_[k].is_keyword("default") || toks_[k].is_op("=")) {
        type_end = k;
        break;
      }
    }
    if (type_end - i >= 2 && toks_[i].is_name() && !is_type_prefix_pair(toks_[i].value, toks_[i + 1].value) &&
        toks_[i + 1].kind != TokenKind::Dot && toks_[i + 1].kind != TokenKind::LParen &&
        toks_[i + 1].kind != TokenKind::LBracket) {
      p.name = toks_[i].value;
      ++i;
    }
    if (i >= type_end) fail("expected parameter type");
    p.type = tidy_type(raw(i, type_end));
    return p;
  }

  std::vector<ParamDef> param_list() {
    std::vector<ParamDef> out;
    expect(TokenKind::LParen, "'('");
    while (peek().kind != TokenKind::RParen) {
      std::size_t from = pos_;
      std::size_t to = scan([](const Token& t) { return t.kind == TokenKind::Comma; });
      if (to == from) fail("expected parameter");
      out.push_back(param(from, to));
      if (!accept(TokenKind::Comma)) break;
    }
    expect(TokenKind::RParen, "')'");
    return out;
  }

  static bool function_option_start(const Token& t) {
    static const char* const kWords[] = {"as",       "language", "immutable", "stable",   "volatile", "strict",
                                         "security", "called",   "cost",      "rows",     "parallel", "leakproof",
                                         "window",   "returns",  "set",       "external", "not",      "support"};
    for (const char* w : kWords)
      if (t.is_keyword(w)) return true;
    return false;
  }

  void create_function(Statement& st) {
    QualifiedName q = qualified();
    FunctionDef& f = st.function;
    f.ns = q.ns.empty() ? std::string(kPublic) : q.ns;
    f.name = q.name;
    st.name = q;
    f.params = param_list();
    bool have_body = false, have_lang = false;
    std::string options;
    while (!at_end()) {
      if (accept("returns")) {
        std::size_t from = pos_;
        if (accept("table")) {
          scan([](const Token&) { return false; });
          expect(TokenKind::RParen, "')'");
        } else {
          advance();
          scan([](const Token& t) { return function_option_start(t); });
        }
        f.returns = tidy_type(raw(from, pos_));
      } else if (accept("as")) {
        const Token& b = advance();
        if (b.kind != TokenKind::DollarString && b.kind != TokenKind::String) fail("expected function body string");
        f.body = b.value;
        have_body = true;
      } else if (accept("language")) {
        const Token& l = advance();
        f.language = l.kind == TokenKind::String ? l.value : fold_identifier(l.text);
        have_lang = true;
      } else {
        std::size_t from = pos_;
        advance();
        scan([](const Token& t) { return function_option_start(t); });
        if (!options.empty()) options += " ";
        options += trim_copy(raw(from, pos_));
      }
    }
    if (!have_body) fail("function body missing");
    if (!have_lang || f.language != "plpgsql") unsupported(st);
    if (f.returns.empty()) fail("RETURNS clause missing");
    std::string upper;
    for (char c : options) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    f.options = upper;
  }

  void create_trigger(Statement& st) {
    TriggerDef& t = st.trigger;
    t.name = name();
    if (accept("before")) {
      t.timing = "BEFORE";
    } else if (accept("after")) {
      t.timing = "AFTER";
    } else if (accept("instead")) {
      expect("of");
      t.timing = "INSTEAD OF";
    } else {
      fail("expected BEFORE, AFTER or INSTEAD OF");
    }
    do {
      if (accept("insert")) {
        t.events.push_back("INSERT");
      } else if (accept("delete")) {
        t.events.push_back("DELETE");
      } else if (accept("truncate")) {
        t.events.push_back("TRUNCATE");
      } else if (accept("update")) {
        t.events.push_back("UPDATE");
        if (accept("of")) {
          do {
            t.update_columns.push_back(name());
          } while (accept(TokenKind::Comma));
        }
      } else {
        fail("expected trigger event");
      }
    } while (accept("or"));
    expect("on");
    t.table = qualified();
    st.name = t.table;
    if (peek().is_keyword("referencing") || peek().is_keyword("from")) unsupported(st);
    while (accept("not") || accept("deferrable") || accept("initially") || accept("deferred") || accept("immediate")) {
    }
    if (accept("for")) {
      accept("each");
      if (accept("row")) {
        t.for_each = "ROW";
      } else if (accept("statement")) {
        t.for_each = "STATEMENT";
      } else {
        fail("expected ROW or STATEMENT");
      }
    } else {
      t.for_each = "STATEMENT";
    }
    if (accept("when")) t.when = parenthesized_raw();
    expect("execute");
    if (!accept("procedure")) expect("function");
    t.function = qualified();
    t.function_args = parenthesized_raw();
  }

  std::optional<std::vector<std::string>> signature_opt() {
    if (peek().kind != TokenKind::LParen) return std::nullopt;
    std::vector<std::string> sig;
    for (const auto& p : param_list())
      if (p.mode != "out") sig.push_back(normalize_type(p.type));
    return sig;
  }

  void drop_behaviour(Statement& st) {
    if (accept("cascade")) {
      st.cascade = true;
    } else {
      accept("restrict");
    }
  }

  void alter_table(Statement& st) {
    if (accept("if")) {
      expect("exists");
      st.if_exists = true;
    }
    accept("only");
    st.name = qualified();
    do {
      AlterAction a;
      if (accept("add")) {
        if (table_constraint_ahead()) {
          a.kind = AlterKind::AddConstraint;
          a.constraint = table_constraint();
        } else {
          accept("column");
          if (accept("if")) {
            expect("not");
            expect("exists");
          }
          a.kind = AlterKind::AddColumn;
          column_def(a.column, a.column_constraints);
        }
      } else if (accept("drop")) {
        if (accept("constraint")) {
          a.kind = AlterKind::DropConstraint;
        } else {
          accept("column");
          a.kind = AlterKind::DropColumn;
        }
        if (accept("if")) expect("exists");
        a.name = name();
        drop_behaviour(st);
      } else if (accept("rename")) {
        if (accept("to")) {
          a.kind = AlterKind::RenameTo;
          a.new_name = name();
        } else {
          if (peek().is_keyword("constraint")) unsupported(st);
          accept("column");
          a.kind = AlterKind::RenameColumn;
          a.name = name();
          expect("to");
          a.new_name = name();
        }
      } else if (accept("set")) {
        expect("schema");
        a.kind = AlterKind::SetSchema;
        a.new_name = name();
      } else if (accept("alter")) {
        accept("column");
        a.name = name();
        bool set_data = peek().is_keyword("set") && peek(1).is_keyword("data");
        if (set_data) {
          advance();
          advance();
        }
        if (set_data ? (expect("type"), true) : accept("type")) {
          a.kind = AlterKind::AlterColumnType;
          std::size_t from = pos_;
          std::size_t to = scan([](const Token& t) {
            return t.kind == TokenKind::Comma || t.is_keyword("using") || t.is_keyword("collate");
          });
          a.type = tidy_type(raw(from, to));
          if (accept("using")) scan([](const Token& t) { return t.kind == TokenKind::Comma; });
        } else if (accept("set")) {
          if (accept("not")) {
            expect("null");
            a.kind = AlterKind::SetNotNull;
          } else {
            expect("default");
            a.kind = AlterKind::SetDefault;
            std::size_t from = pos_;
            std::size_t to = scan([](const Token& t) { return t.kind == TokenKind::Comma; });
            a.expression = trim_copy(raw(from, to));
          }
        } else if (accept("drop")) {
          if (accept("not")) {
            expect("null");
            a.kind = AlterKind::DropNotNull;
          } else {
            expect("default");
            a.kind = AlterKind::DropDefault;
          }
        } else {
          unsupported(st);
        }
      } else {
        unsupported(st);
      }
      st.actions.push_back(std::move(a));
    } while (accept(TokenKind::Comma));
  }

  void alter_view(Statement& st) {
    if (accept("if")) {
      expect("exists");
      st.if_exists = true;
    }
    st.name = qualified();
    AlterAction a;
    if (accept("rename")) {
      if (accept("to")) {
        a.kind = AlterKind::RenameTo;
        a.new_name = name();
      } else {
        accept("column");
        a.kind = AlterKind::RenameColumn;
        a.name = name();
        expect("to");
        a.new_name = name();
      }
    } else if (accept("set")) {
      expect("schema");
      a.kind = AlterKind::SetSchema;
      a.new_name = name();
    } else {
      unsupported(st);
    }
    st.actions.push_back(std::move(a));
  }

  void alter_function(Statement& st) {
    st.name = qualified();
    st.signature = signature_opt();
    AlterAction a;
    if (accept("rename")) {
      expect("to");
      a.kind = AlterKind::RenameTo;
      a.new_name = name();
    } else if (accept("set")) {
      expect("schema");
      a.kind = AlterKind::SetSchema;
      a.new_name = name();
    } else {
      unsupported(st);
    }
    st.actions.push_back(std::move(a));
  }

  void drop(Statement& st) {
    if (accept("table")) {
      st.drop_kind = DropKind::Table;
    } else if (accept("view")) {
      st.drop_kind = DropKind::View;
    } else if (accept("function")) {
      st.drop_kind = DropKind::Function;
    } else if (accept("trigger")) {
      st.drop_kind = DropKind::Trigger;
    } else if (accept("schema")) {
      st.drop_kind = DropKind::Schema;
    } else {
      unsupported(st);
    }
    if (accept("if")) {
      expect("exists");
      st.if_exists = true;
    }
    st.name = qualified();
    if (st.drop_kind == DropKind::Function) st.signature = signature_opt();
    if (st.drop_kind == DropKind::Trigger) {
      expect("on");
      st.on_table = qualified();
    }
    drop_behaviour(st);
  }

  std::string_view text_;
  const std::vector<Token>& toks_;
  std::size_t pos_;
  std::size_t begin_;
  std::size_t end_;
  Token end_token_;
};

}  // namespace

std::vector<Statement> parse_statements(std::string_view text) {
  std::vector<Token> toks = tokenize(text);
  std::vector<Statement> out;
  std::size_t begin = 0;
  int depth = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const Token& t = toks[i];
    if (t.kind == TokenKind::LParen) ++depth;
    if (t.kind == TokenKind::RParen && depth > 0) --depth;
    bool boundary = t.kind == TokenKind::End || (t.kind == TokenKind::Semicolon && depth == 0);
    if (!boundary) continue;
    if (t.kind == TokenKind::End && i > begin && depth != 0)
      throw Error(ErrorCode::SyntaxError, "unbalanced parentheses", Span{toks[begin].span.start, t.span.end});
    if (i > begin) out.push_back(Parser(text, toks, begin, i).statement());
    begin = i + 1;
    depth = 0;
  }
  return out;
}

ConstraintDef parse_constraint_clause(std::string_view text, const TableDef& table, std::string_view column) {
  std::vector<Token> toks = tokenize(text);
  if (toks.size() <= 1) throw Error(ErrorCode::SyntaxError, "empty constraint definition");
  Parser p(text, toks, 0, toks.size() - 1);
  ConstraintDef c = column.empty() ? p.table_constraint_clause() : p.column_constraint_clause(std::string(column));
  (void)table;
  return c;
}

Catalog parse_dump(std::string_view text) {
  Catalog cat;
  for (auto& st : parse_statements(text)) {
    try {
      switch (st.kind) {
        case StatementKind::CreateSchema: cat.add_namespace(st.name.name); break;
        case StatementKind::CreateTable:
          if (st.or_replace) throw Error(ErrorCode::UnsupportedStatement, "CREATE OR REPLACE TABLE", st.span);
          cat.add_table(std::move(st.table));
          break;
        case StatementKind::CreateView: cat.add_view(std::move(st.view)); break;
        case StatementKind::CreateFunction: cat.add_function(std::move(st.function)); break;
        case StatementKind::CreateTrigger: {
          std::string ns = st.trigger.table.ns.empty() ? std::string(kPublic) : st.trigger.table.ns;
          cat.add_trigger(std::move(st.trigger), ns);
          break;
        }
        case StatementKind::AlterTable: {
          std::string ns = st.name.ns.empty() ? std::string(kPublic) : st.name.ns;
          const TableDef* found = cat.find_table(ns, st.name.name);
          if (found == nullptr)
            throw Error(ErrorCode::ContradictsModel, "relation " + st.name.name + " does not exist", st.span);
          TableDef* t = cat.table(found->uid);
          for (auto& a : st.actions) {
            if (a.kind != AlterKind::AddConstraint)
              throw Error(ErrorCode::UnsupportedStatement, "only ALTER TABLE ... ADD CONSTRAINT is accepted in a dump",
                          st.span);
            cat.add_constraint(*t, std::move(a.constraint));
          }
          break;
        }
        default:
          throw Error(ErrorCode::UnsupportedStatement, "statement not accepted in a dump: " + st.text.substr(0, 60),
                      st.span);
      }
    } catch (const Error& e) {
      if (e.span()) throw;
      throw Error(e.code(), e.what(), st.span);
    }
  }
  return cat;
}

}  // namespace dbevo
