#pragma once

#include <stdexcept>
#include <string>

namespace nmp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define NMP_DECLARE_ERROR(Name)              \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

NMP_DECLARE_ERROR(OutOfLimits);
NMP_DECLARE_ERROR(OutOfRange);
NMP_DECLARE_ERROR(InvalidArgument);
NMP_DECLARE_ERROR(ParseError);
NMP_DECLARE_ERROR(UnknownTask);
NMP_DECLARE_ERROR(Infeasible);
NMP_DECLARE_ERROR(InfeasibleQuery);
NMP_DECLARE_ERROR(EpisodeFinished);
NMP_DECLARE_ERROR(MissingGoalField);
NMP_DECLARE_ERROR(InvalidEndpoint);
NMP_DECLARE_ERROR(StepTooLarge);
NMP_DECLARE_ERROR(EmptyEpisode);
NMP_DECLARE_ERROR(NoDemoAvailable);
NMP_DECLARE_ERROR(DimensionMismatch);
NMP_DECLARE_ERROR(MissingConfigGoal);
NMP_DECLARE_ERROR(BindError);

#undef NMP_DECLARE_ERROR

}  // namespace nmp
