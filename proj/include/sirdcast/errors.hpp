#pragma once

#include <stdexcept>
#include <string>

namespace sirdcast {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A compartment undershot zero by more than the clamping tolerance; dt is too large for the rates.
class IntegrationInstability : public Error {
public:
    using Error::Error;
};

class OptimizationFailed : public Error {
public:
    using Error::Error;
};

/// Every day of a fitting window has zero infected, so no rate can be estimated.
class UnidentifiableWindow : public Error {
public:
    using Error::Error;
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class NoDataError : public Error {
public:
    using Error::Error;
};

class DataInconsistency : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Wraps an error raised inside one pipeline stage; what() reads "<stage>: <cause>".
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& cause)
        : Error(stage + ": " + cause), stage_(std::move(stage))
    {
    }
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace sirdcast
