#pragma once

#include <stdexcept>

namespace rblab {

/// Malformed input: bad matrices, out-of-range indices, bad configs.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Singular systems, non-convergence, multichain policies.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact oracle asked to run beyond its size limit.
class GuardrailError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A runtime invariant monitor fired (episode bound, conservation, ...).
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text is not well-formed JSON.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rblab
