#pragma once

#include <stdexcept>
#include <string>

namespace hitchin {

// Base of every error the library throws. `kind()` is a stable identifier used
// by the CLI to map failures onto exit codes and report lines.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define HITCHIN_DEFINE_ERROR(Name)                                \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  };

// numerics
HITCHIN_DEFINE_ERROR(NonConvergence)
HITCHIN_DEFINE_ERROR(SingularOperator)
HITCHIN_DEFINE_ERROR(DimensionMismatch)
// surface
HITCHIN_DEFINE_ERROR(MeshQualityFailure)
HITCHIN_DEFINE_ERROR(MeshFormatError)
// differentials
HITCHIN_DEFINE_ERROR(KernelGapFailure)
HITCHIN_DEFINE_ERROR(CocycleViolation)
// wang
HITCHIN_DEFINE_ERROR(NewtonDivergence)
HITCHIN_DEFINE_ERROR(SingularLinearization)
// connections
HITCHIN_DEFINE_ERROR(UnsolvedState)
HITCHIN_DEFINE_ERROR(PathNotFound)
// goldman
HITCHIN_DEFINE_ERROR(MeshMismatch)
HITCHIN_DEFINE_ERROR(DegenerateGram)
// cli
HITCHIN_DEFINE_ERROR(ConfigParseError)
HITCHIN_DEFINE_ERROR(MissingReport)

#undef HITCHIN_DEFINE_ERROR

}  // namespace hitchin
