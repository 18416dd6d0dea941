#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pgm {

enum class ErrorCode {
  DuplicateEntry,
  DuplicateValue,
  OutOfDomainValue,
  NonPositivePotential,
  DomainMismatch,
  ScopeNotSubset,
  ScopeMismatch,
  DivisionByZero,
  UnknownVariable,
  EmptySupport,
  CapacityExceeded,
  NotATree,
  DisjointScopes,
  Contradiction,
  Timeout,
  MalformedSpec,
  InconsistentClue,
  ParseError,
  IncompleteAssignment,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI exit-code mapping) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace pgm
