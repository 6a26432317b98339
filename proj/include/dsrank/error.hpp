#pragma once

#include <stdexcept>
#include <string>

namespace dsrank {

/// Failure categories. The CLI maps them onto its exit codes.
enum class ErrorKind { Usage = 1, Data = 2, Numerical = 3, Internal = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string &what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string &what) : Error(ErrorKind::Data, what) {}
};

class NumericalError : public Error {
public:
    NumericalError(const std::string &what, int step = -1) : Error(ErrorKind::Numerical, what), step_(step) {}

    /// Dynamics step at which the failure was detected, or -1.
    int step() const noexcept { return step_; }

private:
    int step_;
};

class InternalError : public Error {
public:
    explicit InternalError(const std::string &what) : Error(ErrorKind::Internal, what) {}
};

} // namespace dsrank
