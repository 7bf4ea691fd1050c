#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "dbevo/errors.hpp"

namespace dbevo::utf8 {

// Number of scalar values in a UTF-8 string. Invalid bytes count as one each.
std::size_t length(std::string_view text);

// Byte offset of the scalar value at index `cp` (clamped to text size).
std::size_t byte_offset(std::string_view text, std::size_t cp);

std::string substr(std::string_view text, Span span);

// Replaces the scalar range `span` with `replacement`.
std::string splice(std::string_view text, Span span, std::string_view replacement);

}  // namespace dbevo::utf8
