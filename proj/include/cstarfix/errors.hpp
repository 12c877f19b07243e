#pragma once

#include <stdexcept>
#include <string>

namespace cstarfix {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NotPositive : public Error {
public:
    using Error::Error;
};

class PreconditionViolation : public Error {
public:
    using Error::Error;
};

class UnknownPoint : public Error {
public:
    using Error::Error;
};

class EmptySample : public Error {
public:
    using Error::Error;
};

class PreimageFailure : public Error {
public:
    using Error::Error;
};

class CertificateInvalid : public Error {
public:
    using Error::Error;
};

class DivergentParameters : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class OrbitNotInGraph : public Error {
public:
    using Error::Error;
};

class GateViolation : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class NonlinearKernel : public Error {
public:
    using Error::Error;
};

/// Malformed or semantically invalid configuration input.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace cstarfix
