#include "pgmforge/errors.hpp"

namespace pgm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicateEntry: return "DuplicateEntry";
    case ErrorCode::DuplicateValue: return "DuplicateValue";
    case ErrorCode::OutOfDomainValue: return "OutOfDomainValue";
    case ErrorCode::NonPositivePotential: return "NonPositivePotential";
    case ErrorCode::DomainMismatch: return "DomainMismatch";
    case ErrorCode::ScopeNotSubset: return "ScopeNotSubset";
    case ErrorCode::ScopeMismatch: return "ScopeMismatch";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::NotATree: return "NotATree";
    case ErrorCode::DisjointScopes: return "DisjointScopes";
    case ErrorCode::Contradiction: return "Contradiction";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MalformedSpec: return "MalformedSpec";
    case ErrorCode::InconsistentClue: return "InconsistentClue";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IncompleteAssignment: return "IncompleteAssignment";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace pgm
