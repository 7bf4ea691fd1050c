#include <doctest.h>

#include "dbevo/ddl.hpp"
#include "dbevo/entity_path.hpp"
#include "dbevo/lexer.hpp"
#include "dbevo/utf8.hpp"
#include "support.hpp"

using namespace dbevo;
using namespace dbevo::testing;

TEST_CASE("identifiers fold like PostgreSQL") {
  CHECK(fold_identifier("LastName") == "lastname");
  CHECK(fold_identifier("\"LastName\"") == "LastName");
  CHECK(fold_identifier("\"a\"\"b\"") == "a\"b");
  CHECK(sql_identifier("lastname") == "lastname");
  CHECK(sql_identifier("LastName") == "\"LastName\"");
  CHECK(sql_identifier("select") == "\"select\"");
}

TEST_CASE("type names normalize to catalog spellings") {
  CHECK(normalize_type("integer") == "int4");
  CHECK(normalize_type("character varying(20)") == "varchar");
  CHECK(normalize_type("INT") == "int4");
  CHECK(normalize_type("text") == "text");
}

TEST_CASE("entity paths round-trip") {
  for (const char* p : {"public.person", "public.person.uid", "public.\"Odd Name\".c", "public.id_for_uid(varchar)",
                        "public.members_directory.\"$query\".\"$select1\""}) {
    CHECK(EntityPath::parse(p).str() == p);
  }
  auto f = EntityPath::parse("public.f(int4,varchar).x");
  REQUIRE(f.size() == 3);
  REQUIRE(f[1].signature);
  CHECK(f[1].signature->size() == 2);
}

TEST_CASE("lexer spans count scalar values, not bytes") {
  std::string text = "SELECT 'h\xC3\xA9' AS \"na\xC3\xAFve\", x FROM t";
  auto toks = tokenize(text);
  REQUIRE(toks.size() >= 7);
  const Token& quoted = toks[3];
  CHECK(quoted.kind == TokenKind::QuotedIdentifier);
  CHECK(quoted.value == "na\xC3\xAFve");
  // independent count: 'SELECT ' (7) + 'hé' (4 scalars) + ' AS ' (4)
  CHECK(quoted.span.start == 15);
  CHECK(quoted.span.end == 22);
  const Token& x = toks[5];
  CHECK(utf8::substr(text, x.span) == "x");
}

TEST_CASE("lexer handles dollar quotes, comments and casts") {
  auto toks = tokenize("a::text -- note\n/* block /* nested */ */ $fn$ body $$ inside $fn$ $1");
  REQUIRE(toks.size() == 6);
  CHECK(toks[1].kind == TokenKind::Cast);
  CHECK(toks[3].kind == TokenKind::DollarString);
  CHECK(toks[3].value == " body $$ inside ");
  CHECK(toks[4].kind == TokenKind::Parameter);
  CHECK(toks[5].kind == TokenKind::End);
  CHECK_THROWS_AS(tokenize("'open"), Error);
}

TEST_CASE("dump parser builds the running example catalog") {
  Catalog c = parse_dump(read_fixture("running_example.sql"));
  REQUIRE(c.tables.size() == 1);
  CHECK(c.tables[0].columns.size() == 3);
  CHECK(c.tables[0].constraints.size() == 1);
  CHECK(c.views.size() == 2);
  REQUIRE(c.functions.size() == 1);
  CHECK(c.functions[0].signature() == std::vector<std::string>{"varchar"});
}

TEST_CASE("parsing rejects unsupported statements with a location") {
  try {
    parse_dump("CREATE TABLE t (a int);\nGRANT ALL ON t TO bob;");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedStatement);
  }
}

TEST_CASE("canonical dump ignores declaration order") {
  Catalog a = parse_dump("CREATE TABLE a (x int); CREATE TABLE b (y int);");
  Catalog b = parse_dump("CREATE TABLE b (y int); CREATE TABLE a (x int);");
  CHECK(canonical_dump(a) == canonical_dump(b));
}
