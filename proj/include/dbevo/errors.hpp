#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dbevo {

// Offsets are counted in Unicode scalar values, 0-based, end-exclusive.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  bool contains(const Span& other) const { return start <= other.start && other.end <= end; }
  bool overlaps(const Span& other) const { return start < other.end && other.start < end; }
  std::size_t length() const { return end - start; }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

enum class ErrorCode {
  SyntaxError,
  UnsupportedStatement,
  UnresolvedInCheckedContext,
  ParseFailure,
  UnknownEntity,
  NotSourceBearing,
  CycleDetected,
  IllegalOnReferencedEntity,
  ContradictsModel,
  NoSqlForm,
  NoSchemeForOperator,
  InvalidOperator,
  AlreadyDecided,
  UnknownRecommendation,
  UnknownReference,
  UnresolvedHumanDecision,
  PendingDecisions,
  MissingDefinition,
  ContradictoryOperators,
  CorruptSessionFile,
  UnknownSession,
  UnknownOperator,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::optional<Span> span = std::nullopt)
      : std::runtime_error(std::move(message)), code_(code), span_(span) {}

  ErrorCode code() const noexcept { return code_; }
  const std::optional<Span>& span() const noexcept { return span_; }

 private:
  ErrorCode code_;
  std::optional<Span> span_;
};

}  // namespace dbevo
