#pragma once

#include <stdexcept>
#include <string>

namespace pilotwave {

/// Base class of every error raised by the library. `kind()` is a stable
/// identifier used by the CLI when it reports failures.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define PILOTWAVE_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(#Name, what) {}     \
  };

// Input/configuration problems.
PILOTWAVE_DEFINE_ERROR(InvalidArgument)
PILOTWAVE_DEFINE_ERROR(CutoffExceeded)
PILOTWAVE_DEFINE_ERROR(ImpossibleCategory)
PILOTWAVE_DEFINE_ERROR(SupportMismatch)

// Numerical failures.
PILOTWAVE_DEFINE_ERROR(AtNode)
PILOTWAVE_DEFINE_ERROR(OriginSingular)
PILOTWAVE_DEFINE_ERROR(OnSeparatrix)
PILOTWAVE_DEFINE_ERROR(StepUnderflow)
PILOTWAVE_DEFINE_ERROR(Indeterminate)
PILOTWAVE_DEFINE_ERROR(TrackingLost)
PILOTWAVE_DEFINE_ERROR(BuildFailed)
PILOTWAVE_DEFINE_ERROR(CFLViolated)

#undef PILOTWAVE_DEFINE_ERROR

/// True for errors that come from bad input rather than numerics.
inline bool is_config_error(const Error& e) {
  const auto& k = e.kind();
  return k == "InvalidArgument" || k == "CutoffExceeded" || k == "ImpossibleCategory" ||
         k == "SupportMismatch";
}

}  // namespace pilotwave
