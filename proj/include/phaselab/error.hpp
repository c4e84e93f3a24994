#pragma once

#include <stdexcept>
#include <string>

namespace phaselab {

/// Base for every failure raised by the library. `kind()` is a stable
/// identifier used by the CLI and the Python bindings.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define PHASELAB_DEFINE_ERROR(Name)                               \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  };

PHASELAB_DEFINE_ERROR(DegenerateGradient)
PHASELAB_DEFINE_ERROR(UnsupportedAlpha)
PHASELAB_DEFINE_ERROR(HypothesisViolated)
PHASELAB_DEFINE_ERROR(OutOfDomain)
PHASELAB_DEFINE_ERROR(NoConvergence)
PHASELAB_DEFINE_ERROR(CheckFailed)
PHASELAB_DEFINE_ERROR(DegenerateWindow)
PHASELAB_DEFINE_ERROR(NoDecayWindow)
PHASELAB_DEFINE_ERROR(NonAdmissible)
PHASELAB_DEFINE_ERROR(NotHyperbolic)
PHASELAB_DEFINE_ERROR(TruncationTooShort)
PHASELAB_DEFINE_ERROR(TruncationMismatch)
PHASELAB_DEFINE_ERROR(EmptyLevelSet)
PHASELAB_DEFINE_ERROR(FormatError)
PHASELAB_DEFINE_ERROR(ConfigError)

#undef PHASELAB_DEFINE_ERROR

}  // namespace phaselab
