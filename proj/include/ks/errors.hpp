#pragma once

#include <stdexcept>
#include <string>

namespace ks {

// Base for everything this library throws. The CLI maps any Error to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// inner(a,b) is 0 or 1 within tolerance, so no canonical pair basis exists.
struct DegeneratePairError : Error {
    using Error::Error;
};

// A sqrt argument fell below the clamp window, or an input was non-finite.
struct NumericDomainError : Error {
    using Error::Error;
};

struct PreconditionError : Error {
    using Error::Error;
};

struct DuplicateIdError : Error {
    using Error::Error;
};

struct UnknownIdError : Error {
    using Error::Error;
};

// The same observable is required to take both value 0 and value 1.
struct ContradictoryPremisesError : Error {
    using Error::Error;
};

struct SearchBudgetExceededError : Error {
    using Error::Error;
};

struct IterationBudgetExceededError : Error {
    using Error::Error;
};

// Constraint solving could not realize every interior ray of a gadget topology.
struct GadgetRealizationError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace ks
