#include "sdg/error.hpp"

namespace sdg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNonFiniteState: return "NonFiniteState";
    case ErrorKind::kPolicyFailure: return "PolicyFailure";
    case ErrorKind::kNoValidLambda: return "NoValidLambda";
    case ErrorKind::kSingularGain: return "SingularGain";
    case ErrorKind::kDegenerateBatch: return "DegenerateBatch";
    case ErrorKind::kEnergyBoundViolated: return "EnergyBoundViolated";
    case ErrorKind::kUnstableSolve: return "UnstableSolve";
    case ErrorKind::kStencilOutOfDomain: return "StencilOutOfDomain";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace sdg
