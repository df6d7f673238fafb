// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace accq {

enum class ErrorKind {
  InvalidBitWidth,
  NonPositiveK,
  NonFiniteInput,
  NonPositiveRadius,
  LengthMismatch,
  BudgetExceeded,
  Infeasible,
  HypothesisViolation,
  Divergence,
  EmptyInput,
  ParseError,
  FileNotFound,
};

const char *to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace accq
