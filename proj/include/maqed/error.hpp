#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maqed {

enum class Errc {
  InvalidArgument,
  NotSymmetric,
  NegativeEigenvalue,
  NotOrthogonal,
  ZeroWavevector,
  IncompatibleGrid,
  SingularResonance,
  InsufficientHistory,
  NonPassive,
  TailTruncation,
  SingularAtDispersion,
  PoleOnContour,
  DegreeMismatch,
  ContourResolution,
  MissingKernel,
  UnsupportedGeometry,
  IdentityViolated,
  Config,
  Io,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
  case Errc::InvalidArgument: return "InvalidArgument";
  case Errc::NotSymmetric: return "NotSymmetric";
  case Errc::NegativeEigenvalue: return "NegativeEigenvalue";
  case Errc::NotOrthogonal: return "NotOrthogonal";
  case Errc::ZeroWavevector: return "ZeroWavevector";
  case Errc::IncompatibleGrid: return "IncompatibleGrid";
  case Errc::SingularResonance: return "SingularResonance";
  case Errc::InsufficientHistory: return "InsufficientHistory";
  case Errc::NonPassive: return "NonPassive";
  case Errc::TailTruncation: return "TailTruncation";
  case Errc::SingularAtDispersion: return "SingularAtDispersion";
  case Errc::PoleOnContour: return "PoleOnContour";
  case Errc::DegreeMismatch: return "DegreeMismatch";
  case Errc::ContourResolution: return "ContourResolution";
  case Errc::MissingKernel: return "MissingKernel";
  case Errc::UnsupportedGeometry: return "UnsupportedGeometry";
  case Errc::IdentityViolated: return "IdentityViolated";
  case Errc::Config: return "Config";
  case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Library-wide exception. The code identifies the failed contract; the
/// message carries the numbers that broke it.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

} // namespace maqed
