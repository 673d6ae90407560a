#pragma once

#include <stdexcept>
#include <string>

namespace banditrl {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define BANDITRL_DEFINE_ERROR(Name)                 \
    class Name : public Error {                     \
    public:                                         \
        explicit Name(const std::string& what)      \
            : Error(std::string(#Name ": ") + what) \
        {}                                          \
    }

BANDITRL_DEFINE_ERROR(StepAfterDone);
BANDITRL_DEFINE_ERROR(InvalidAction);
BANDITRL_DEFINE_ERROR(InvalidArchitecture);
BANDITRL_DEFINE_ERROR(DimensionMismatch);
BANDITRL_DEFINE_ERROR(ArchitectureMismatch);
BANDITRL_DEFINE_ERROR(NonFiniteGradient);
BANDITRL_DEFINE_ERROR(InvalidConfig);
BANDITRL_DEFINE_ERROR(InsufficientData);
BANDITRL_DEFINE_ERROR(NegativeKL);
BANDITRL_DEFINE_ERROR(EmptySequence);
BANDITRL_DEFINE_ERROR(RewardOutOfRange);
BANDITRL_DEFINE_ERROR(InsufficientPulls);
BANDITRL_DEFINE_ERROR(ConfigError);
BANDITRL_DEFINE_ERROR(IoError);
BANDITRL_DEFINE_ERROR(MissingLogs);

#undef BANDITRL_DEFINE_ERROR

}  // namespace banditrl
