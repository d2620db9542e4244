#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdg {

enum class ErrorKind {
  kNonFiniteState,
  kPolicyFailure,
  kNoValidLambda,
  kSingularGain,
  kDegenerateBatch,
  kEnergyBoundViolated,
  kUnstableSolve,
  kStencilOutOfDomain,
  kInvalidArgument,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Error raised by every module of the library. The kind is stable and is
/// what callers (including the CLI's exit code mapping) should branch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace sdg
