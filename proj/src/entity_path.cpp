#include "dbevo/entity_path.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "dbevo/errors.hpp"

namespace dbevo {

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Words PostgreSQL refuses as bare column/table names.
bool is_reserved(std::string_view w) {
  static const char* const kReserved[] = {
      "all",    "analyse", "analyze", "and",    "any",      "array",  "as",     "asc",
      "both",   "case",    "cast",    "check",  "collate",  "column", "constraint",
      "create", "default", "desc",    "distinct", "do",     "else",   "end",    "except",
      "false",  "fetch",   "for",     "foreign", "from",    "grant",  "group",  "having",
      "in",     "into",    "join",    "leading", "limit",   "not",    "null",   "offset",
      "on",     "only",    "or",      "order",  "primary",  "references", "returning",
      "select", "table",   "then",    "to",     "trailing", "true",   "union",  "unique",
      "user",   "using",   "when",    "where",  "window",   "with"};
  return std::find(std::begin(kReserved), std::end(kReserved), w) != std::end(kReserved);
}

}  // namespace

std::string fold_identifier(std::string_view raw) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      out.push_back(raw[i]);
      if (raw[i] == '"' && i + 2 < raw.size() && raw[i + 1] == '"') ++i;
    }
    return out;
  }
  return ascii_lower(raw);
}

bool is_plain_identifier(std::string_view name) {
  if (name.empty()) return false;
  unsigned char first = static_cast<unsigned char>(name[0]);
  if (!(std::islower(first) || first == '_')) return false;
  for (unsigned char c : name) {
    if (!(std::islower(c) || std::isdigit(c) || c == '_' || c == '$')) return false;
  }
  return !is_reserved(name);
}

std::string quote_identifier(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string sql_identifier(std::string_view name) {
  return is_plain_identifier(name) ? std::string(name) : quote_identifier(name);
}

std::string normalize_type(std::string_view type) {
  std::string t = ascii_lower(trim(type));
  std::string collapsed;
  bool space = false;
  for (char c : t) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !collapsed.empty() && c != '(' && c != '[' && collapsed.back() != '(') collapsed.push_back(' ');
    space = false;
    collapsed.push_back(c);
  }
  std::string suffix;
  std::size_t arr = collapsed.find("[]");
  if (arr != std::string::npos) {
    suffix = collapsed.substr(arr);
    collapsed = collapsed.substr(0, arr);
  }
  std::string base = collapsed;
  std::size_t paren = base.find('(');
  if (paren != std::string::npos) base = trim(base.substr(0, paren));
  static const std::map<std::string, std::string> kAliases = {
      {"integer", "int4"},
      {"int", "int4"},
      {"serial", "int4"},
      {"serial4", "int4"},
      {"bigint", "int8"},
      {"bigserial", "int8"},
      {"serial8", "int8"},
      {"smallint", "int2"},
      {"smallserial", "int2"},
      {"character varying", "varchar"},
      {"char varying", "varchar"},
      {"character", "bpchar"},
      {"char", "bpchar"},
      {"boolean", "bool"},
      {"double precision", "float8"},
      {"real", "float4"},
      {"decimal", "numeric"},
      {"timestamp without time zone", "timestamp"},
      {"timestamp with time zone", "timestamptz"},
      {"time without time zone", "time"},
      {"time with time zone", "timetz"},
  };
  if (auto it = kAliases.find(base); it != kAliases.end()) base = it->second;
  if (base.rfind("pg_catalog.", 0) == 0) base = base.substr(11);
  return base + suffix;
}

EntityPath EntityPath::parse(std::string_view text) {
  std::vector<PathSegment> segments;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::UnknownEntity, "malformed entity path '" + std::string(text) + "': " + why);
  };
  while (i < text.size()) {
    PathSegment seg;
    if (text[i] == '"') {
      std::size_t j = i + 1;
      std::string name;
      for (; j < text.size(); ++j) {
        if (text[j] == '"') {
          if (j + 1 < text.size() && text[j + 1] == '"') {
            name.push_back('"');
            ++j;
            continue;
          }
          break;
        }
        name.push_back(text[j]);
      }
      if (j >= text.size()) fail("unterminated quote");
      seg.name = name;
      seg.quoted = true;
      i = j + 1;
    } else {
      std::size_t j = i;
      while (j < text.size() && text[j] != '.' && text[j] != '(') ++j;
      seg.name = ascii_lower(trim(text.substr(i, j - i)));
      i = j;
    }
    if (i < text.size() && text[i] == '(') {
      std::size_t close = text.find(')', i);
      if (close == std::string_view::npos) fail("unterminated signature");
      std::vector<std::string> sig;
      std::string_view inner = text.substr(i + 1, close - i - 1);
      std::size_t b = 0;
      while (b <= inner.size() && !trim(inner).empty()) {
        std::size_t comma = inner.find(',', b);
        std::string_view part = inner.substr(b, comma == std::string_view::npos ? std::string_view::npos : comma - b);
        sig.push_back(normalize_type(part));
        if (comma == std::string_view::npos) break;
        b = comma + 1;
      }
      seg.signature = std::move(sig);
      i = close + 1;
    }
    if (seg.name.empty()) fail("empty segment");
    segments.push_back(std::move(seg));
    if (i < text.size()) {
      if (text[i] != '.') fail("expected '.'");
      ++i;
      if (i == text.size()) fail("trailing '.'");
    }
  }
  if (segments.empty()) fail("empty path");
  return EntityPath(std::move(segments));
}

EntityPath EntityPath::child(PathSegment segment) const {
  std::vector<PathSegment> s = segments_;
  s.push_back(std::move(segment));
  return EntityPath(std::move(s));
}

EntityPath EntityPath::child(std::string name) const {
  PathSegment seg;
  seg.quoted = !is_plain_identifier(name) && name.find('$') == std::string::npos;
  seg.name = std::move(name);
  return child(std::move(seg));
}

EntityPath EntityPath::parent() const {
  std::vector<PathSegment> s = segments_;
  if (!s.empty()) s.pop_back();
  return EntityPath(std::move(s));
}

std::string EntityPath::str() const {
  std::string out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (i) out.push_back('.');
    const auto& seg = segments_[i];
    bool needs_quotes = seg.quoted || (!seg.name.empty() && seg.name[0] != '$' && !is_plain_identifier(seg.name) &&
                                       seg.name.find_first_of("ABCDEFGHIJKLMNOPQRSTUVWXYZ .\"()") != std::string::npos);
    out += needs_quotes ? quote_identifier(seg.name) : seg.name;
    if (seg.signature) {
      out.push_back('(');
      for (std::size_t k = 0; k < seg.signature->size(); ++k) {
        if (k) out.push_back(',');
        out += (*seg.signature)[k];
      }
      out.push_back(')');
    }
  }
  return out;
}

}  // namespace dbevo
