#pragma once

#include <stdexcept>
#include <string>

namespace lpmkl {

// Exception hierarchy. Callers that only care about "bad input" vs "numerics went
// wrong" can catch InputError / NumericError; the CLI maps both to exit code 2.

struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : InputError {
    using InputError::InputError;
};

struct InsufficientDataError : InputError {
    using InputError::InputError;
};

struct UnsupportedFormulationError : InputError {
    using InputError::InputError;
};

struct SizeError : InputError {
    using InputError::InputError;
};

struct DegenerateInputError : InputError {
    using InputError::InputError;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed file content. `where` carries line/field context.
struct DataError : std::runtime_error {
    DataError(const std::string& where, const std::string& what)
        : std::runtime_error(where + ": " + what) {}
};

}  // namespace lpmkl
