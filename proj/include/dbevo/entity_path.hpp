#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dbevo {

// Unquoted identifiers fold to lowercase; quoted identifiers are kept exact.
std::string fold_identifier(std::string_view raw);

// True when `name` can be written without double quotes.
bool is_plain_identifier(std::string_view name);

// Writes `name` so that it folds back to itself ("Foo" stays quoted, foo does not).
std::string sql_identifier(std::string_view name);

// Always double-quoted form of a folded name.
std::string quote_identifier(std::string_view name);

// Canonical spelling of a declared type name, used in procedure signatures
// (integer -> int4, character varying(20) -> varchar, ...).
std::string normalize_type(std::string_view type);

struct PathSegment {
  std::string name;  // folded form
  bool quoted = false;
  std::optional<std::vector<std::string>> signature;  // normalized parameter types

  friend bool operator==(const PathSegment& a, const PathSegment& b) {
    return a.name == b.name && a.signature == b.signature;
  }
};

class EntityPath {
 public:
  EntityPath() = default;
  explicit EntityPath(std::vector<PathSegment> segments) : segments_(std::move(segments)) {}

  // Parses "ns.table.column", "\"Odd\".t", "public.f(int4,varchar)".
  static EntityPath parse(std::string_view text);

  const std::vector<PathSegment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  std::size_t size() const { return segments_.size(); }
  const PathSegment& back() const { return segments_.back(); }
  const PathSegment& operator[](std::size_t i) const { return segments_[i]; }

  EntityPath child(PathSegment segment) const;
  EntityPath child(std::string name) const;
  EntityPath parent() const;

  std::string str() const;

  friend bool operator==(const EntityPath& a, const EntityPath& b) { return a.segments_ == b.segments_; }
  friend bool operator<(const EntityPath& a, const EntityPath& b) { return a.str() < b.str(); }

 private:
  std::vector<PathSegment> segments_;
};

}  // namespace dbevo
