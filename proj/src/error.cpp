// SPDX-License-Identifier: Apache-2.0
#include "accq/error.hpp"

namespace accq {

const char *to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidBitWidth: return "invalid-bit-width";
    case ErrorKind::NonPositiveK: return "nonpositive-K";
    case ErrorKind::NonFiniteInput: return "nonfinite-input";
    case ErrorKind::NonPositiveRadius: return "nonpositive-radius";
    case ErrorKind::LengthMismatch: return "length-mismatch";
    case ErrorKind::BudgetExceeded: return "budget-exceeded";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::HypothesisViolation: return "hypothesis-violation";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::ParseError: return "parse-error";
    case ErrorKind::FileNotFound: return "file-not-found";
  }
  return "unknown";
}

}  // namespace accq
