#include "defcon/errors.hpp"

namespace defcon {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::SingularUpdate: return "SingularUpdate";
    case ErrorCode::NonFiniteResidual: return "NonFiniteResidual";
    case ErrorCode::DerivativeUnavailable: return "DerivativeUnavailable";
    case ErrorCode::AtDeflatedRoot: return "AtDeflatedRoot";
    case ErrorCode::UnknownBenchmark: return "UnknownBenchmark";
    case ErrorCode::AllBranchesLost: return "AllBranchesLost";
  }
  return "Unknown";
}

}  // namespace defcon
