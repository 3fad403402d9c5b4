#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace specmap {

// Every library error carries a short machine-parsable code; the CLI prints
// it as "<code>: <message>" on stderr.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define SPECMAP_ERROR_CLASS(Name, Code)                \
  class Name : public Error {                          \
   public:                                             \
    explicit Name(const std::string& message)          \
        : Error(Code, message) {}                      \
  };

SPECMAP_ERROR_CLASS(IoError, "E_IO")
SPECMAP_ERROR_CLASS(ParseError, "E_PARSE")
SPECMAP_ERROR_CLASS(EmptyMesh, "E_EMPTY")
SPECMAP_ERROR_CLASS(DegenerateGeometry, "E_DEGEN")
SPECMAP_ERROR_CLASS(DisconnectedMesh, "E_DISCONNECTED")
SPECMAP_ERROR_CLASS(DimensionMismatch, "E_DIM")
SPECMAP_ERROR_CLASS(NonFiniteInput, "E_NONFINITE")
SPECMAP_ERROR_CLASS(ConvergenceFailure, "E_CONVERGE")
SPECMAP_ERROR_CLASS(KTooLarge, "E_KSIZE")
SPECMAP_ERROR_CLASS(SingularSystem, "E_SINGULAR")
SPECMAP_ERROR_CLASS(ConfigError, "E_CONFIG")
SPECMAP_ERROR_CLASS(InsufficientSpectrum, "E_SPECTRUM")
SPECMAP_ERROR_CLASS(ZeroColumn, "E_ZEROCOL")
SPECMAP_ERROR_CLASS(OutOfBudget, "E_BUDGET")

#undef SPECMAP_ERROR_CLASS

}  // namespace specmap
