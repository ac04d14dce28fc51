#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grassgp {

enum class ErrorKind {
  ZeroMatrix,
  SingularOverlap,
  ShapeMismatch,
  AmbientMismatch,
  NotOrthonormal,
  NotTangent,
  InvalidArgument,
  NoConvergence,
  IsolatedVertex,
  EmptyCluster,
  NonpositiveLengthScale,
  IllConditioned,
  DimensionMismatch,
  ShapeError,
  SingularPrediction,
  NonFinite,
  Io,
  Parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers can branch
/// without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ZeroMatrix: return "ZeroMatrix";
    case ErrorKind::SingularOverlap: return "SingularOverlap";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::AmbientMismatch: return "AmbientMismatch";
    case ErrorKind::NotOrthonormal: return "NotOrthonormal";
    case ErrorKind::NotTangent: return "NotTangent";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::IsolatedVertex: return "IsolatedVertex";
    case ErrorKind::EmptyCluster: return "EmptyCluster";
    case ErrorKind::NonpositiveLengthScale: return "NonpositiveLengthScale";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::SingularPrediction: return "SingularPrediction";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace grassgp
