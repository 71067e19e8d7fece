#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qhom {

enum class ErrorKind {
  NotFound,
  DimensionError,
  NoConvergence,
  OutOfDomain,
  SingularJacobian,
  SingularCoefficient,
  UnresolvedOscillation,
  InvalidSample,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::SingularCoefficient: return "SingularCoefficient";
    case ErrorKind::UnresolvedOscillation: return "UnresolvedOscillation";
    case ErrorKind::InvalidSample: return "InvalidSample";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace qhom
