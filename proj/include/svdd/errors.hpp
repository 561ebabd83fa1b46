#pragma once

#include <stdexcept>
#include <string>

namespace svdd {

// Error taxonomy shared across the library.  The CLI maps these to process
// exit codes: ConfigError -> 2, DataError / TransportError / ProtocolError -> 3,
// TrainingError / NumericError and anything else -> 4.

// Bad or inconsistent run configuration (flags, config file, option values).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or unusable input data (datasets, embedding files, run artifacts).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor/layer dimension mismatch.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An API precondition was violated by the caller.
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Optimization produced non-finite values or otherwise failed.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numeric linear-algebra failure (e.g. singular matrix after regularization).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Network-level failure talking to the embedding service.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The embedding service answered, but not in the agreed shape.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace svdd
