#pragma once

#include <stdexcept>
#include <string>

namespace soh {

// Base class for every error raised by the library. The CLI prints
// e.what() verbatim, so messages carry their category prefix.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define SOH_ERROR_TYPE(NAME)                                               \
    struct NAME : Error {                                                  \
        explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
    }

// trajectory / integration
SOH_ERROR_TYPE(EmptyWindow);
SOH_ERROR_TYPE(NonMonotonicTime);
SOH_ERROR_TYPE(NonPositiveQ0);
SOH_ERROR_TYPE(OutOfRangeGrid);

// cycle segmentation / features
SOH_ERROR_TYPE(WrongCycleType);
SOH_ERROR_TYPE(UnsegmentableStream);

// regression solver
SOH_ERROR_TYPE(DidNotConverge);
SOH_ERROR_TYPE(DimensionMismatch);

// clustering estimator
SOH_ERROR_TYPE(GridMismatch);
SOH_ERROR_TYPE(PrefixOutOfRange);
SOH_ERROR_TYPE(EmptyState);

// fusion
SOH_ERROR_TYPE(InvalidWeights);
SOH_ERROR_TYPE(StaleCycle);

// metrics
SOH_ERROR_TYPE(LengthMismatch);
SOH_ERROR_TYPE(NonPositiveTruth);

// synthetic fleet generation
SOH_ERROR_TYPE(InvalidSpec);

// ingestion / files
SOH_ERROR_TYPE(SchemaError);
SOH_ERROR_TYPE(DuplicateTimestamp);
SOH_ERROR_TYPE(EmptyFile);
SOH_ERROR_TYPE(IoError);

#undef SOH_ERROR_TYPE

}  // namespace soh
