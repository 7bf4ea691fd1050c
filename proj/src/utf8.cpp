#include "dbevo/utf8.hpp"

namespace dbevo::utf8 {

namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::size_t length(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if (!is_continuation(c)) ++n;
  }
  return n;
}

std::size_t byte_offset(std::string_view text, std::size_t cp) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_continuation(static_cast<unsigned char>(text[i]))) continue;
    if (seen == cp) return i;
    ++seen;
  }
  return text.size();
}

std::string substr(std::string_view text, Span span) {
  std::size_t b = byte_offset(text, span.start);
  std::size_t e = byte_offset(text, span.end);
  if (e < b) e = b;
  return std::string(text.substr(b, e - b));
}

std::string splice(std::string_view text, Span span, std::string_view replacement) {
  std::size_t b = byte_offset(text, span.start);
  std::size_t e = byte_offset(text, span.end);
  std::string out;
  out.reserve(text.size() + replacement.size());
  out.append(text.substr(0, b));
  out.append(replacement);
  out.append(text.substr(e));
  return out;
}

}  // namespace dbevo::utf8
