#pragma once

#include <stdexcept>
#include <string>

namespace wristvat {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid invocation or configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data that cannot be processed (CLI exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

#define WRISTVAT_DEFINE_ERROR(Name, Base) \
    class Name : public Base {            \
    public:                               \
        using Base::Base;                 \
    };

// ingest
WRISTVAT_DEFINE_ERROR(ParseError, DataError)
WRISTVAT_DEFINE_ERROR(EmptyRecording, DataError)
WRISTVAT_DEFINE_ERROR(NonFiniteSample, DataError)

// sigproc
WRISTVAT_DEFINE_ERROR(WindowTooShort, ConfigError)
WRISTVAT_DEFINE_ERROR(DegenerateFrame, DataError)
WRISTVAT_DEFINE_ERROR(SeriesTooShort, DataError)
WRISTVAT_DEFINE_ERROR(ZeroVariance, DataError)
WRISTVAT_DEFINE_ERROR(ZeroVarianceAxis, DataError)

// dynamics
WRISTVAT_DEFINE_ERROR(FrameTooShort, DataError)
WRISTVAT_DEFINE_ERROR(AllPointsTrimmed, DataError)
WRISTVAT_DEFINE_ERROR(FrameTooShortForScale, DataError)
WRISTVAT_DEFINE_ERROR(ZeroVarianceChannel, DataError)

// gait / sleep
WRISTVAT_DEFINE_ERROR(InsufficientFrames, DataError)

// model
WRISTVAT_DEFINE_ERROR(MissingCovariate, DataError)
WRISTVAT_DEFINE_ERROR(DegenerateDesign, DataError)
WRISTVAT_DEFINE_ERROR(FeatureMismatch, DataError)
WRISTVAT_DEFINE_ERROR(ConstantInput, DataError)
WRISTVAT_DEFINE_ERROR(LengthMismatch, DataError)
WRISTVAT_DEFINE_ERROR(TooFewRows, DataError)
WRISTVAT_DEFINE_ERROR(WeightMismatch, ConfigError)
WRISTVAT_DEFINE_ERROR(CategoryTooSmall, DataError)
WRISTVAT_DEFINE_ERROR(SingularSystem, DataError)

#undef WRISTVAT_DEFINE_ERROR

}  // namespace wristvat
