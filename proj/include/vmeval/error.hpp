#pragma once

#include <stdexcept>
#include <string>

namespace vmeval {

/// Invalid argument supplied by the caller (bad dimension, unknown enum, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Filesystem or network failure; message carries the offending path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (PNG, JSON, FEN, video container, judge reply).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A structural invariant of a domain type does not hold.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Generator could not produce an accepted sample inside its retry budget.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace vmeval
