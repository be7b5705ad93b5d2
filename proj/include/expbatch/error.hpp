#ifndef EXPBATCH_ERROR_HPP
#define EXPBATCH_ERROR_HPP

#include <stdexcept>
#include <string>

namespace expbatch {

// Every failure in the pipeline carries one of these codes so callers can
// branch on the category without string-matching messages.
enum class ErrorKind {
  // generic
  InvalidPath,
  IoError,
  ParseError,
  SchemaError,
  InvariantError,
  // query DSL
  SyntaxError,
  NotPowerOfTwo,
  NonDivisible,
  EmptySet,
  UnknownVariable,
  MissingCase,
  // XML engine
  XmlSyntaxError,
  UnsupportedFeature,
  NoMatch,
  AmbiguousPath,
  RemoveRoot,
  // executor / platform
  MissingInput,
  PlatformError,
  EmptyPlan,
  SubmitterNotFound,
  SubmitFailed,
  MissingPlaceholder,
  ReservedName,
  UnknownPlaceholder,
  // statistics
  NoSuccessfulRuns,
  ShapeMismatch,
  MissingOutput,
  CsvParseError,
  UnknownColumn,
  LengthMismatch,
  // deliverables / comparison
  EmptySeries,
  NonFiniteValue,
  EmptyCsv,
  CriteriaMismatch,
  TooFewBatches,
  // driver
  UsageError,
  PrerequisiteMissing,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace expbatch

#endif  // EXPBATCH_ERROR_HPP
