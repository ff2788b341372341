#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gupbic {

enum class ErrorKind {
  InvalidSetup,
  Domain,
  Unsupported,
  ComplexQuartet,
  DegenerateBasis,
  Validity,
  ClassificationNeeded,
  InvalidConditions,
  DegenerateConfiguration,
  Normalization,
  Precondition,
  Arity,
  WrongPotential,
  UndefinedExponent,
  Numerical,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gupbic
