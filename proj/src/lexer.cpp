#include "dbevo/lexer.hpp"

#include <cctype>

#include "dbevo/entity_path.hpp"

namespace dbevo {

namespace {

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_trivia();
      if (pos_ >= text_.size()) break;
      out.push_back(next());
    }
    Token end;
    end.kind = TokenKind::End;
    end.span = {cp_, cp_};
    end.byte_begin = end.byte_end = text_.size();
    out.push_back(end);
    return out;
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (pos_ >= text_.size()) return;
    ++pos_;
    while (pos_ < text_.size() && (static_cast<unsigned char>(text_[pos_]) & 0xC0) == 0x80) ++pos_;
    ++cp_;
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t start_cp) const {
    throw Error(ErrorCode::SyntaxError, msg, Span{start_cp, cp_});
  }

  void skip_trivia() {
    while (pos_ < text_.size()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '-' && peek(1) == '-') {
        while (pos_ < text_.size() && peek() != '\n') advance();
      } else if (c == '/' && peek(1) == '*') {
        std::size_t start = cp_;
        advance();
        advance();
        int depth = 1;
        while (depth > 0) {
          if (pos_ >= text_.size()) fail("unterminated block comment", start);
          if (peek() == '*' && peek(1) == '/') {
            advance();
            advance();
            --depth;
          } else if (peek() == '/' && peek(1) == '*') {
            advance();
            advance();
            ++depth;
          } else {
            advance();
          }
        }
      } else {
        break;
      }
    }
  }

  static bool ident_start(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return std::isalpha(u) || c == '_' || u >= 0x80;
  }
  static bool ident_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || c == '$' || u >= 0x80;
  }

  Token next() {
    Token t;
    std::size_t b = pos_;
    t.span.start = cp_;
    t.byte_begin = b;
    char c = peek();
    if ((c == 'E' || c == 'e' || c == 'B' || c == 'b' || c == 'X' || c == 'x' || c == 'N' || c == 'n') &&
        peek(1) == '\'') {
      bool escapes = (c == 'E' || c == 'e');
      advance();
      lex_string(t, escapes);
    } else if (ident_start(c)) {
      while (pos_ < text_.size() && ident_char(peek())) advance();
      t.kind = TokenKind::Identifier;
      t.text = std::string(text_.substr(b, pos_ - b));
      t.value = fold_identifier(t.text);
    } else if (c == '"') {
      std::size_t start = cp_;
      advance();
      while (true) {
        if (pos_ >= text_.size()) fail("unterminated quoted identifier", start);
        if (peek() == '"') {
          if (peek(1) == '"') {
            advance();
            advance();
            continue;
          }
          advance();
          break;
        }
        advance();
      }
      t.kind = TokenKind::QuotedIdentifier;
      t.text = std::string(text_.substr(b, pos_ - b));
      t.value = fold_identifier(t.text);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      if (peek() == '.' && peek(1) != '.') {
        advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      }
      if ((peek() == 'e' || peek() == 'E') &&
          (std::isdigit(static_cast<unsigned char>(peek(1))) ||
           ((peek(1) == '+' || peek(1) == '-') && std::isdigit(static_cast<unsigned char>(peek(2)))))) {
        advance();
        advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      }
      t.kind = TokenKind::Number;
      t.text = t.value = std::string(text_.substr(b, pos_ - b));
    } else if (c == '\'') {
      lex_string(t, false);
    } else if (c == '$') {
      lex_dollar(t);
    } else {
      lex_punct(t);
    }
    t.byte_end = pos_;
    t.span.end = cp_;
    if (t.text.empty()) t.text = std::string(text_.substr(b, pos_ - b));
    return t;
  }

  void lex_string(Token& t, bool escapes) {
    std::size_t start = cp_;
    advance();  // opening quote
    std::string value;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string literal", start);
      char c = peek();
      if (c == '\'') {
        if (peek(1) == '\'') {
          value.push_back('\'');
          advance();
          advance();
          continue;
        }
        advance();
        break;
      }
      if (escapes && c == '\\' && pos_ + 1 < text_.size()) {
        advance();
        value.push_back(peek());
        advance();
        continue;
      }
      std::size_t cb = pos_;
      advance();
      value.append(text_.substr(cb, pos_ - cb));
    }
    t.kind = TokenKind::String;
    t.value = std::move(value);
  }

  void lex_dollar(Token& t) {
    std::size_t start = cp_;
    if (std::isdigit(static_cast<unsigned char>(peek(1)))) {
      std::size_t b = pos_;
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      t.kind = TokenKind::Parameter;
      t.text = t.value = std::string(text_.substr(b, pos_ - b));
      return;
    }
    std::size_t j = pos_ + 1;
    while (j < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_')) ++j;
    if (j >= text_.size() || text_[j] != '$') {
      lex_punct(t);
      return;
    }
    std::string delim(text_.substr(pos_, j - pos_ + 1));
    while (pos_ <= j) advance();
    std::size_t body_b = pos_;
    std::size_t body_cp = cp_;
    std::size_t close = text_.find(delim, pos_);
    if (close == std::string_view::npos) fail("unterminated dollar-quoted string", start);
    while (pos_ < close) advance();
    t.content_byte_begin = body_b;
    t.content_byte_end = close;
    t.content_span = {body_cp, cp_};
    for (std::size_t k = 0; k < delim.size(); ++k) advance();
    t.kind = TokenKind::DollarString;
    t.value = std::string(text_.substr(body_b, close - body_b));
  }

  void lex_punct(Token& t) {
    char c = peek();
    switch (c) {
      case '(': t.kind = TokenKind::LParen; advance(); return;
      case ')': t.kind = TokenKind::RParen; advance(); return;
      case '[': t.kind = TokenKind::LBracket; advance(); return;
      case ']': t.kind = TokenKind::RBracket; advance(); return;
      case ',': t.kind = TokenKind::Comma; advance(); return;
      case ';': t.kind = TokenKind::Semicolon; advance(); return;
      case '.': t.kind = TokenKind::Dot; advance(); return;
      case ':':
        if (peek(1) == ':') {
          t.kind = TokenKind::Cast;
          advance();
          advance();
        } else if (peek(1) == '=') {
          t.kind = TokenKind::Assign;
          advance();
          advance();
        } else {
          t.kind = TokenKind::Colon;
          advance();
        }
        return;
      default: break;
    }
    static const std::string_view kOpChars = "+-*/<>=~!@#%^&|`?";
    if (kOpChars.find(c) == std::string_view::npos) {
      std::size_t start = cp_;
      advance();
      fail(std::string("unexpected character '") + c + "'", start);
    }
    std::size_t b = pos_;
    while (pos_ < text_.size() && kOpChars.find(peek()) != std::string_view::npos) {
      if ((peek() == '-' && peek(1) == '-') || (peek() == '/' && peek(1) == '*')) {
        if (pos_ > b) break;
      }
      advance();
      // Single-character operators that never combine in this grammar.
      std::string_view sofar = text_.substr(b, pos_ - b);
      if (sofar == "*" || sofar == "%") break;
    }
    t.kind = TokenKind::Operator;
    t.text = t.value = std::string(text_.substr(b, pos_ - b));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t cp_ = 0;
};

}  // namespace

std::vector<Token> tokenize(std::string_view text) { return Lexer(text).run(); }

}  // namespace dbevo
