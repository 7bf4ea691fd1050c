#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dbevo/errors.hpp"

namespace dbevo {

enum class TokenKind {
  Identifier,
  QuotedIdentifier,
  Number,
  String,
  DollarString,
  Parameter,  // $1
  Operator,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Semicolon,
  Dot,
  Cast,    // ::
  Assign,  // :=
  Colon,
  End,
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;   // raw spelling
  std::string value;  // folded identifier, string contents, dollar-quoted body
  Span span;          // scalar offsets into the lexed text
  std::size_t byte_begin = 0;
  std::size_t byte_end = 0;
  // Dollar-quoted strings: location of the body between the delimiters.
  Span content_span;
  std::size_t content_byte_begin = 0;
  std::size_t content_byte_end = 0;

  bool is_word() const { return kind == TokenKind::Identifier; }
  bool is_name() const { return kind == TokenKind::Identifier || kind == TokenKind::QuotedIdentifier; }
  // Case-insensitive keyword test; never matches quoted identifiers.
  bool is_keyword(std::string_view kw) const { return kind == TokenKind::Identifier && value == kw; }
  bool is_op(std::string_view op) const { return kind == TokenKind::Operator && text == op; }
};

// Comments and whitespace are dropped. The final token is always End.
// Throws SyntaxError on unterminated strings, quotes or comments.
std::vector<Token> tokenize(std::string_view text);

}  // namespace dbevo
