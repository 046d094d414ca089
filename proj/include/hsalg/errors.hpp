#pragma once

#include <stdexcept>
#include <string>

namespace hsalg {

// Base of every error raised by the library. Each subclass names one failure
// mode so callers can catch selectively.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HSALG_DEFINE_ERROR(Name)              \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

HSALG_DEFINE_ERROR(DimensionMismatch);
HSALG_DEFINE_ERROR(InvalidArgument);
HSALG_DEFINE_ERROR(NoCommonZero);
HSALG_DEFINE_ERROR(DegenerateSystem);
HSALG_DEFINE_ERROR(RankDeficient);
HSALG_DEFINE_ERROR(NotTangent);
HSALG_DEFINE_ERROR(StencilOutOfDomain);
HSALG_DEFINE_ERROR(UnknownPreset);
HSALG_DEFINE_ERROR(ChoiceDependent);
HSALG_DEFINE_ERROR(SingularMetric);
HSALG_DEFINE_ERROR(PathOutsideChart);
HSALG_DEFINE_ERROR(GramDrift);
HSALG_DEFINE_ERROR(DegenerateCloud);
HSALG_DEFINE_ERROR(ParseError);
HSALG_DEFINE_ERROR(IoError);

#undef HSALG_DEFINE_ERROR

}  // namespace hsalg
