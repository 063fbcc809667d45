#pragma once

#include <stdexcept>
#include <string>

namespace streambal {

// Every failure raised by the library derives from Error. The CLI maps the
// concrete type onto its exit code (config -> 2, data -> 3, rest -> 1).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad flags, bindings, or sampler/study configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or out-of-range input data.
class DataError : public Error {
public:
    using Error::Error;
};

class DimensionError : public DataError {
public:
    using DataError::DataError;
};

class ValidationError : public DataError {
public:
    using DataError::DataError;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Moran I undefined: constant sample or zero denominator.
class DegenerateVarianceError : public DataError {
public:
    using DataError::DataError;
};

// Numerical breakdown inside the simplex (distinct from infeasibility).
class SolverError : public Error {
public:
    using Error::Error;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

// Broken internal contract, e.g. an LP solution outside its bounds.
class InvariantError : public Error {
public:
    using Error::Error;
};

}  // namespace streambal
