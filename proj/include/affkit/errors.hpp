#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace affkit {

enum class ErrorCode {
  MissingHeader,
  MalformedRow,
  OutOfRange,
  WrongArity,
  EmptyDirectory,
  EmptyManifest,
  LengthMismatch,
  TooFewSamples,
  ClassOutOfRange,
  ShapeMismatch,
  MissingPrediction,
  MalformedPredictionRow,
  BatchTooSmall,
  AllMasksEmpty,
  StaleCache,
  EmptySubset,
  BadConfig,
  IoError,
};

constexpr const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::WrongArity: return "WrongArity";
    case ErrorCode::EmptyDirectory: return "EmptyDirectory";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ClassOutOfRange: return "ClassOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::MalformedPredictionRow: return "MalformedPredictionRow";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::AllMasksEmpty: return "AllMasksEmpty";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parse failure with the 1-based line number of the offending line. The file
// name is attached later by callers that know it (build_manifest).
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t line_no, std::string detail,
             std::string file = {})
      : Error(code, format(file, line_no, detail)),
        line_no_(line_no),
        detail_(std::move(detail)),
        file_(std::move(file)) {}

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& file() const noexcept { return file_; }

  ParseError with_file(std::string file) const {
    return ParseError(code(), line_no_, detail_, std::move(file));
  }

 private:
  static std::string format(const std::string& file, std::size_t line_no,
                            const std::string& detail) {
    std::string out;
    if (!file.empty()) {
      out += file;
      out += ": ";
    }
    out += "line " + std::to_string(line_no) + ": " + detail;
    return out;
  }

  std::size_t line_no_;
  std::string detail_;
  std::string file_;
};

}  // namespace affkit
