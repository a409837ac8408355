#pragma once

#include <stdexcept>
#include <string>

namespace lmsfd {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible matrix shapes; message names both shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid configuration value or combination.
struct ConfigError : Error {
    using Error::Error;
};

// Unknown language / missing key.
struct LookupError : Error {
    using Error::Error;
};

// Malformed or degenerate input data.
struct DataError : Error {
    using Error::Error;
};

// Malformed file content; message names the offending line.
struct ParseError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required (divergence, bad loss).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace lmsfd
