#pragma once

#include <stdexcept>
#include <string>

namespace modelmap {

inline constexpr const char* kVersion = "0.1.0";

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define MODELMAP_ERROR_TYPE(NAME)                                              \
    struct NAME : Error {                                                      \
        using Error::Error;                                                    \
    }

MODELMAP_ERROR_TYPE(InvalidMatrix);
MODELMAP_ERROR_TYPE(InvalidArgument);
MODELMAP_ERROR_TYPE(InvalidPlan);
MODELMAP_ERROR_TYPE(InvalidFolds);
MODELMAP_ERROR_TYPE(DegenerateMatrix);
MODELMAP_ERROR_TYPE(DegenerateDraw);
MODELMAP_ERROR_TYPE(DegenerateDistances);
MODELMAP_ERROR_TYPE(DegenerateInput);
MODELMAP_ERROR_TYPE(InsufficientTrials);
MODELMAP_ERROR_TYPE(BudgetExceeded);
MODELMAP_ERROR_TYPE(UnsupportedFormat);
MODELMAP_ERROR_TYPE(CorruptFile);
MODELMAP_ERROR_TYPE(ParseError);

#undef MODELMAP_ERROR_TYPE

}  // namespace modelmap
