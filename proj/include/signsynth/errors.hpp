#pragma once

#include <stdexcept>
#include <string>

namespace signsynth {

// Base for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A caller violated a documented precondition. Maps to CLI exit code 2.
struct PreconditionError : Error {
    using Error::Error;
};

// Malformed serialized input (JSON, checkpoint, config).
struct ParseError : Error {
    using Error::Error;
};

// Structurally valid input that does not match the expected schema.
struct SchemaError : Error {
    using Error::Error;
};

// Bad run configuration (unknown key, invalid value, shape mismatch).
struct ConfigError : Error {
    using Error::Error;
};

// Numerically invalid state (NaN loss, non-finite input, non-PSD matrix).
struct NumericError : Error {
    using Error::Error;
};

// Filesystem failure; message carries the offending path.
struct IoError : Error {
    using Error::Error;
};

}  // namespace signsynth
