#include "expbatch/error.hpp"

namespace expbatch {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidPath: return "InvalidPath";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::InvariantError: return "InvariantError";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::NotPowerOfTwo: return "NotPowerOfTwo";
    case ErrorKind::NonDivisible: return "NonDivisible";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::MissingCase: return "MissingCase";
    case ErrorKind::XmlSyntaxError: return "XmlSyntaxError";
    case ErrorKind::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorKind::NoMatch: return "NoMatch";
    case ErrorKind::AmbiguousPath: return "AmbiguousPath";
    case ErrorKind::RemoveRoot: return "RemoveRoot";
    case ErrorKind::MissingInput: return "MissingInput";
    case ErrorKind::PlatformError: return "PlatformError";
    case ErrorKind::EmptyPlan: return "EmptyPlan";
    case ErrorKind::SubmitterNotFound: return "SubmitterNotFound";
    case ErrorKind::SubmitFailed: return "SubmitFailed";
    case ErrorKind::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorKind::ReservedName: return "ReservedName";
    case ErrorKind::UnknownPlaceholder: return "UnknownPlaceholder";
    case ErrorKind::NoSuccessfulRuns: return "NoSuccessfulRuns";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::MissingOutput: return "MissingOutput";
    case ErrorKind::CsvParseError: return "CsvParseError";
    case ErrorKind::UnknownColumn: return "UnknownColumn";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptySeries: return "EmptySeries";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::EmptyCsv: return "EmptyCsv";
    case ErrorKind::CriteriaMismatch: return "CriteriaMismatch";
    case ErrorKind::TooFewBatches: return "TooFewBatches";
    case ErrorKind::UsageError: return "UsageError";
    case ErrorKind::PrerequisiteMissing: return "PrerequisiteMissing";
  }
  return "Error";
}

}  // namespace expbatch
