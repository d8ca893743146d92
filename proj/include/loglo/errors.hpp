#pragma once

#include <stdexcept>
#include <string>

namespace loglo {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI's single-line error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define LOGLO_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

LOGLO_DEFINE_ERROR(InvalidInput);
LOGLO_DEFINE_ERROR(ShapeError);
LOGLO_DEFINE_ERROR(ConfigError);
LOGLO_DEFINE_ERROR(DegenerateTarget);
LOGLO_DEFINE_ERROR(DegenerateBaseline);
LOGLO_DEFINE_ERROR(FormatError);
LOGLO_DEFINE_ERROR(IoError);
LOGLO_DEFINE_ERROR(UnsupportedOp);
LOGLO_DEFINE_ERROR(DivergenceError);
LOGLO_DEFINE_ERROR(StepSizeError);

#undef LOGLO_DEFINE_ERROR

}  // namespace loglo
