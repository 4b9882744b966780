#pragma once

#include <stdexcept>
#include <string>

namespace trires {

// Base of every error thrown by the library. Each subclass names one failure
// category; the CLI maps categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TRIRES_DEFINE_ERROR(Name)     \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  }

TRIRES_DEFINE_ERROR(ShapeError);
TRIRES_DEFINE_ERROR(NumericError);
TRIRES_DEFINE_ERROR(LabelError);
TRIRES_DEFINE_ERROR(StateError);
TRIRES_DEFINE_ERROR(ConfigError);
TRIRES_DEFINE_ERROR(FormatError);
TRIRES_DEFINE_ERROR(BoundsError);
TRIRES_DEFINE_ERROR(DegenerateHistogram);
TRIRES_DEFINE_ERROR(EmptyMaskError);
TRIRES_DEFINE_ERROR(SamplingExhausted);
TRIRES_DEFINE_ERROR(SpecError);
TRIRES_DEFINE_ERROR(SplitError);
TRIRES_DEFINE_ERROR(EmptyEvaluation);
TRIRES_DEFINE_ERROR(IoError);

#undef TRIRES_DEFINE_ERROR

}  // namespace trires
