#pragma once

#include <stdexcept>
#include <string>

namespace btoep {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or length of an argument does not match the operator / vector.
struct DimensionError : Error {
    using Error::Error;
};

// A space-time vector arrived with the wrong index ordering tag.
struct OrderingError : Error {
    using Error::Error;
};

// Malformed or inconsistent binary file.
struct FormatError : Error {
    using Error::Error;
};

// Processor grid that cannot be serviced (e.g. a worker would own nothing).
struct GridError : Error {
    using Error::Error;
};

// Iterative solver detected a violated precondition (e.g. loss of positive
// definiteness).
struct SolverError : Error {
    using Error::Error;
};

}  // namespace btoep
