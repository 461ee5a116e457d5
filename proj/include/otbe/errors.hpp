#pragma once

#include <exception>
#include <string>
#include <string_view>
#include <utility>

namespace otbe {

// Base class for all library failures. Pipeline code annotates errors with
// the stage they occurred in before rethrowing, so messages read like
// "[whitening] covariance block 'X' is numerically singular ...".
class Error : public std::exception {
public:
    explicit Error(std::string msg) : msg_(std::move(msg)) {}

    const char* what() const noexcept override { return msg_.c_str(); }

    void prepend_stage(std::string_view stage) {
        msg_ = "[" + std::string(stage) + "] " + msg_;
    }

private:
    std::string msg_;
};

class InvalidData : public Error {
public:
    using Error::Error;
};

class InsufficientSamples : public Error {
public:
    using Error::Error;
};

class SingularCovariance : public Error {
public:
    using Error::Error;
};

class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class UnknownClass : public Error {
public:
    using Error::Error;
};

class ClassTooSmall : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

// Runs a pipeline stage and tags any library error with the stage name.
template <class Fn>
decltype(auto) run_stage(std::string_view stage, Fn&& fn) {
    try {
        return fn();
    } catch (Error& e) {
        e.prepend_stage(stage);
        throw;
    }
}

} // namespace otbe
