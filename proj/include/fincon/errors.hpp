#pragma once

#include <stdexcept>
#include <string>

namespace fincon {

// Base class for everything thrown by this library.  Input errors are bad
// data or bad configuration (CLI exit code 2); compute errors are failures
// that arise during otherwise well-posed numerics (CLI exit code 1).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InputError : public Error {
public:
    explicit InputError(const std::string& msg) : Error(msg) {}
};

class ComputeError : public Error {
public:
    explicit ComputeError(const std::string& msg) : Error(msg) {}
};

#define FINCON_INPUT_ERROR(Name)                                      \
    class Name : public InputError {                                  \
    public:                                                           \
        explicit Name(const std::string& msg) : InputError(msg) {}    \
    }

#define FINCON_COMPUTE_ERROR(Name)                                    \
    class Name : public ComputeError {                                \
    public:                                                           \
        explicit Name(const std::string& msg) : ComputeError(msg) {}  \
    }

// market data
FINCON_INPUT_ERROR(MalformedRow);
FINCON_INPUT_ERROR(DuplicateKey);
FINCON_INPUT_ERROR(NonPositivePrice);
FINCON_INPUT_ERROR(UnfillableColumn);
FINCON_INPUT_ERROR(EmptyEra);
FINCON_INPUT_ERROR(EmptyInput);
FINCON_COMPUTE_ERROR(ZeroVolumeWindow);

// shared contract violations (bad call arguments, mismatched shapes)
FINCON_INPUT_ERROR(Precondition);
FINCON_INPUT_ERROR(DimensionMismatch);
FINCON_INPUT_ERROR(LengthMismatch);
FINCON_INPUT_ERROR(AssetOrderMismatch);

// decomposition
FINCON_COMPUTE_ERROR(RankDeficient);
FINCON_COMPUTE_ERROR(DegenerateInput);
FINCON_INPUT_ERROR(WindowTooLong);
FINCON_COMPUTE_ERROR(ZeroTotalVariance);
FINCON_COMPUTE_ERROR(ZeroVarianceComponent);
FINCON_INPUT_ERROR(EmptyReferenceSet);

// factors
FINCON_COMPUTE_ERROR(OverflowGuard);
FINCON_COMPUTE_ERROR(InsufficientData);
FINCON_COMPUTE_ERROR(InsufficientOverlap);

// network stage
FINCON_INPUT_ERROR(AsymmetricInput);
FINCON_COMPUTE_ERROR(ZeroVector);
FINCON_COMPUTE_ERROR(SingularCovariance);
FINCON_COMPUTE_ERROR(DegenerateRow);
FINCON_COMPUTE_ERROR(NoPositiveEdges);
FINCON_INPUT_ERROR(KTooLarge);

// synthetic generators
FINCON_INPUT_ERROR(NotPSD);

// configuration / CLI
FINCON_INPUT_ERROR(ConfigError);

#undef FINCON_INPUT_ERROR
#undef FINCON_COMPUTE_ERROR

}  // namespace fincon
