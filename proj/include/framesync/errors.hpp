#pragma once

#include <stdexcept>
#include <string>

namespace framesync {

// Malformed file contents (bad magic, truncation, non-finite payload).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem-level failure, message carries the path.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition violation on an operation argument.
struct ArgError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A dimension exceeds a fixed bound (e.g. a matrix larger than the pad size).
struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Non-finite value surfaced during numeric computation.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace framesync
