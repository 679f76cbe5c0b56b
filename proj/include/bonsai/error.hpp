#pragma once

#include <stdexcept>
#include <string>

namespace bonsai {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented contract (bad parameters, malformed skeleton, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Growth distances are not ordered step < kill < influence.
class OrderingViolation : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NonPositive : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvariantViolation : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class UnsizedSkeleton : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyMesh : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class TooFewPoints : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyForeground : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Weighted attractor directions cancel, no growth direction exists.
class DegenerateDirection : public Error {
public:
    using Error::Error;
};

class SingularCovariance : public Error {
public:
    using Error::Error;
};

/// File system failure (missing file, unwritable directory).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace bonsai
