#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace touchauth {

enum class ErrorKind {
  // ingestion
  UnparseableHeader,
  MalformedRateExceeded,
  EmptyDataset,
  NoEligibleUsers,
  // features
  UnknownFeatureId,
  UnknownStudy,
  // selection
  SingleClass,
  EmptyMatrix,
  // classifiers
  SingleClassForBinarySpec,
  TooFewSamples,
  DimensionMismatch,
  // aggregation
  EmptyWindow,
  HeterogeneousWindows,
  InconsistentSequenceLength,
  LengthMismatch,
  // protocol
  TooFewSessions,
  TooFewAttackers,
  EmptyGroup,
  EmptyScores,
  ProtocolViolation,
  // configuration / io
  Config,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnparseableHeader: return "UnparseableHeader";
    case ErrorKind::MalformedRateExceeded: return "MalformedRateExceeded";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::NoEligibleUsers: return "NoEligibleUsers";
    case ErrorKind::UnknownFeatureId: return "UnknownFeatureId";
    case ErrorKind::UnknownStudy: return "UnknownStudy";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::SingleClassForBinarySpec: return "SingleClassForBinarySpec";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::HeterogeneousWindows: return "HeterogeneousWindows";
    case ErrorKind::InconsistentSequenceLength: return "InconsistentSequenceLength";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooFewSessions: return "TooFewSessions";
    case ErrorKind::TooFewAttackers: return "TooFewAttackers";
    case ErrorKind::EmptyGroup: return "EmptyGroup";
    case ErrorKind::EmptyScores: return "EmptyScores";
    case ErrorKind::ProtocolViolation: return "ProtocolViolation";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace touchauth
