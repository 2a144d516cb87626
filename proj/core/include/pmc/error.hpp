#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pmc {

enum class ErrorCode {
  GapUnresolved,
  ObstaclesOverlap,
  TruncationTooTight,
  InvalidGeometry,
  NotNearBoundary,
  NotLipschitzEnough,
  CutoffTooTight,
  InfeasibleField,
  DegenerateCell,
  QuadratureFailure,
  NoFeasibleStart,
  StalledInfeasible,
  Unattainable,
  GeometryMismatch,
  ConfigInvalid,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace pmc
