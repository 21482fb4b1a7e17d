#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace egfet {

enum class Errc {
  InvalidArgument,
  BelowThreshold,
  NegativeDiscriminant,
  EmptyGrid,
  TooFewPoints,
  BadWindow,
  DegenerateWindow,
  NoInteriorMax,
  NonpositiveGm,
  NegativeSecondDerivative,
  NonpositiveCurrent,
  NonpositiveDerivative,
  InsufficientGateValues,
  WindowBelowThreshold,
  ParallelLines,
  InsufficientDevices,
  MissingReference,
  ParseError,
  MissingMetadata,
  NonMonotoneGrid,
  InconsistentFamily,
  IoError,
  EmptyPlot,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::BelowThreshold: return "BelowThreshold";
    case Errc::NegativeDiscriminant: return "NegativeDiscriminant";
    case Errc::EmptyGrid: return "EmptyGrid";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::BadWindow: return "BadWindow";
    case Errc::DegenerateWindow: return "DegenerateWindow";
    case Errc::NoInteriorMax: return "NoInteriorMax";
    case Errc::NonpositiveGm: return "NonpositiveGm";
    case Errc::NegativeSecondDerivative: return "NegativeSecondDerivative";
    case Errc::NonpositiveCurrent: return "NonpositiveCurrent";
    case Errc::NonpositiveDerivative: return "NonpositiveDerivative";
    case Errc::InsufficientGateValues: return "InsufficientGateValues";
    case Errc::WindowBelowThreshold: return "WindowBelowThreshold";
    case Errc::ParallelLines: return "ParallelLines";
    case Errc::InsufficientDevices: return "InsufficientDevices";
    case Errc::MissingReference: return "MissingReference";
    case Errc::ParseError: return "ParseError";
    case Errc::MissingMetadata: return "MissingMetadata";
    case Errc::NonMonotoneGrid: return "NonMonotoneGrid";
    case Errc::InconsistentFamily: return "InconsistentFamily";
    case Errc::IoError: return "IoError";
    case Errc::EmptyPlot: return "EmptyPlot";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an egfet::Error carrying a
/// machine-readable code; the CLI maps codes to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace egfet
