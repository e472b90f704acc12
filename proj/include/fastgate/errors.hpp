#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fastgate {

enum class ErrorKind {
  Unstable,
  TruncationInsufficient,
  DegenerateDrive,
  SingularDenominator,
  NoConvergence,
  ResonantCrystal,
  QuadratureFailure,
  InvalidTiming,
  GroupOverlap,
  StepFailure,
  EscapedIon,
  NonConvergence,
  ConfigError,
};

constexpr std::string_view error_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Unstable: return "Unstable";
    case ErrorKind::TruncationInsufficient: return "TruncationInsufficient";
    case ErrorKind::DegenerateDrive: return "DegenerateDrive";
    case ErrorKind::SingularDenominator: return "SingularDenominator";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ResonantCrystal: return "ResonantCrystal";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::InvalidTiming: return "InvalidTiming";
    case ErrorKind::GroupOverlap: return "GroupOverlap";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::EscapedIon: return "EscapedIon";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return error_name(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace fastgate
