#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kronsim {

enum class ErrorKind {
  DisconnectedNode,
  DuplicateBranch,
  NonpositiveInductance,
  InvalidBranch,
  UnknownNode,
  SingularIntermediateBlock,
  DimensionMismatch,
  MissingFeedforwardInput,
  NonFiniteDerivative,
  NonFiniteState,
  NewtonDivergence,
  InconsistentInitialState,
  GridMismatch,
  UnknownTarget,
  UnknownField,
  InvalidConfig,
  SyntaxError,
  SemanticError,
  IoError,
  MalformedCsv,
  EmptySelection,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DisconnectedNode: return "DisconnectedNode";
    case ErrorKind::DuplicateBranch: return "DuplicateBranch";
    case ErrorKind::NonpositiveInductance: return "NonpositiveInductance";
    case ErrorKind::InvalidBranch: return "InvalidBranch";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::SingularIntermediateBlock: return "SingularIntermediateBlock";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MissingFeedforwardInput: return "MissingFeedforwardInput";
    case ErrorKind::NonFiniteDerivative: return "NonFiniteDerivative";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::NewtonDivergence: return "NewtonDivergence";
    case ErrorKind::InconsistentInitialState: return "InconsistentInitialState";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::UnknownTarget: return "UnknownTarget";
    case ErrorKind::UnknownField: return "UnknownField";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::SemanticError: return "SemanticError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::MalformedCsv: return "MalformedCsv";
    case ErrorKind::EmptySelection: return "EmptySelection";
  }
  return "Unknown";
}

/// Base exception for everything the library reports. `kind()` is stable and
/// is what the CLI prints as `ERROR <kind>: <detail>`.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind),
        detail_(detail) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// One validation finding. `code` is the specific rule that failed
/// (e.g. NonpositiveInductance); it is reported under SemanticError.
struct Issue {
  ErrorKind code;
  std::string detail;
};

/// Raised by the case parser with every semantic problem found, not just the
/// first one.
class CaseError : public Error {
 public:
  explicit CaseError(std::vector<Issue> issues)
      : Error(ErrorKind::SemanticError, summarize(issues)),
        issues_(std::move(issues)) {}

  const std::vector<Issue>& issues() const noexcept { return issues_; }

 private:
  static std::string summarize(const std::vector<Issue>& issues) {
    std::string out = std::to_string(issues.size()) + " validation error(s)";
    for (const auto& issue : issues) {
      out += "; ";
      out += to_string(issue.code);
      out += ": ";
      out += issue.detail;
    }
    return out;
  }

  std::vector<Issue> issues_;
};

/// Syntax error in a case file, with 1-based line and column.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& what)
      : Error(ErrorKind::SyntaxError, "line " + std::to_string(line) +
                                          ", column " + std::to_string(column) +
                                          ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace kronsim
