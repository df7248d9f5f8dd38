#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace autoad {

enum class ErrorKind {
  InvalidArgument,
  TooManyMissing,
  AllMissing,
  WindowTooLarge,
  IncompatibleFrequency,
  SeriesTooShort,
  InsufficientData,
  NonConvergence,
  NumericalBreakdown,
  RateTooHigh,
  DuplicateId,
  InvalidSpec,
  ExpiredModel,
  MissingModel,
  MalformedCsv,
  UnknownDataset,
  SingleClass,
  LengthMismatch,
  MissingData,
  EmptyScores,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::TooManyMissing: return "TooManyMissing";
    case ErrorKind::AllMissing: return "AllMissing";
    case ErrorKind::WindowTooLarge: return "WindowTooLarge";
    case ErrorKind::IncompatibleFrequency: return "IncompatibleFrequency";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::RateTooHigh: return "RateTooHigh";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::ExpiredModel: return "ExpiredModel";
    case ErrorKind::MissingModel: return "MissingModel";
    case ErrorKind::MalformedCsv: return "MalformedCsv";
    case ErrorKind::UnknownDataset: return "UnknownDataset";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::MissingData: return "MissingData";
    case ErrorKind::EmptyScores: return "EmptyScores";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace autoad
