#pragma once

#include <stdexcept>
#include <string>

namespace etnet {

// Dimension mismatches between operands.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Caller broke a precondition (bad arguments, bad config, missing file).
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numeric failure at runtime: singular covariance, divergence, non-finite values.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file content; carries the 1-based line number.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, int line_no)
        : std::runtime_error(what + " (line " + std::to_string(line_no) + ")"),
          line(line_no) {}
    int line;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace etnet
