#ifndef RACLORA_ERRORS_HPP
#define RACLORA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace raclora {

// Base of every error thrown by the library. The harness maps subclasses
// onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidMatrix : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class Unsupported : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Raised when an iterate stops being finite or blows past the divergence
// threshold. Chain runners catch it and flag the trace instead.
class DivergenceDetected : public Error {
public:
    DivergenceDetected(long step, double f_value)
        : Error("divergence detected at step " + std::to_string(step) +
                " (f = " + std::to_string(f_value) + ")"),
          step_(step),
          f_value_(f_value) {}

    long step() const noexcept { return step_; }
    double f_value() const noexcept { return f_value_; }

private:
    long step_;
    double f_value_;
};

}  // namespace raclora

#endif  // RACLORA_ERRORS_HPP
