#include "ellfocal/error.hpp"

namespace ellfocal {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::UnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::ConstraintViolation: return "constraint-violation";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::IntegrationFailure: return "integration-failure";
    case ErrorKind::PoleOfQ: return "pole-of-Q";
    case ErrorKind::NoContact: return "no-contact";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::NoUmbilicFound: return "no-umbilic-found";
    case ErrorKind::InvalidMultiplicities: return "invalid-multiplicities";
    case ErrorKind::InvalidIsometry: return "invalid-isometry";
    case ErrorKind::BarrierProximity: return "barrier-proximity";
    case ErrorKind::ReductionInconsistency: return "reduction-inconsistency";
    case ErrorKind::InsufficientResolution: return "insufficient-resolution";
  }
  return "unknown";
}

}  // namespace ellfocal
